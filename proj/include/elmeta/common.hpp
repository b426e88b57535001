#pragma once

#include <charconv>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace elmeta {

inline constexpr const char* kToolVersion = "0.1.0";

/// Thrown on bad inputs detected before any work starts (CLI maps it to exit 1).
struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Stable hashing / seed derivation.
//
// All hashes used for provenance and seed derivation are computed from these
// fixed-algorithm functions, never from std::hash, so artifacts and sweep
// seeds are stable across platforms and standard-library versions.
// ---------------------------------------------------------------------------

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_mix(std::uint64_t h, std::uint64_t v) {
    return splitmix64(h ^ v);
}

/// Seed for one (dataset, hidden-neuron count, repetition) training, derived
/// from the run's base seed. Every unit of work owns its seed, so any task
/// decomposition reproduces the sequential result bit for bit.
inline std::uint64_t derive_seed(std::uint64_t base_seed, std::string_view dataset_name,
                                 int neuron_count, int repetition) {
    std::uint64_t h = hash_mix(base_seed, fnv1a64(dataset_name));
    h = hash_mix(h, static_cast<std::uint64_t>(neuron_count));
    h = hash_mix(h, static_cast<std::uint64_t>(repetition));
    return h;
}

// ---------------------------------------------------------------------------
// Deterministic random draws.
//
// mt19937_64 has a standardized output sequence; the distributions below are
// hand-derived from raw 64-bit draws because std::uniform_*_distribution is
// not guaranteed identical across standard libraries.
// ---------------------------------------------------------------------------

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_range(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform_unit(rng);
}

/// Fisher-Yates permutation of {0, ..., n-1} fully determined by seed.
inline std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::mt19937_64 rng(seed);
    for (std::size_t i = n; i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

// ---------------------------------------------------------------------------
// Number formatting / parsing.
// ---------------------------------------------------------------------------

/// Shortest round-trip decimal representation; used for every float written
/// to an artifact so reruns are byte-identical.
inline std::string fmt_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

inline std::string_view trim(std::string_view s) {
    const char* ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

/// Strict finite-double parse of the whole (trimmed) token. Leading '+' is
/// accepted; inf/nan and trailing garbage are not.
inline std::optional<double> parse_double(std::string_view s) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    if (!(v == v) || v > 1.7976931348623157e308 || v < -1.7976931348623157e308) return std::nullopt;
    return v;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

} // namespace elmeta
