#pragma once

// Deterministic synthetic fixtures for tests and the acceptance suite.

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "elmeta/dataset.hpp"
#include "elmeta/metabase.hpp"

namespace synthetic {

inline elmeta::Dataset from_columns(const std::string& name,
                                    std::vector<std::pair<std::string, std::vector<double>>> cols,
                                    std::vector<double> target,
                                    const std::string& target_name = "target") {
    elmeta::Dataset d;
    d.name = name;
    for (auto& [cname, values] : cols)
        d.features.push_back(elmeta::Column::make_continuous(cname, std::move(values)));
    d.target = elmeta::Column::make_continuous(target_name, std::move(target));
    d.validate();
    return d;
}

/// Regression problem of tunable intrinsic complexity: a latent factor u in
/// [-1, 1] observed through six noisy copies, with the target a sum of
/// `components` sinusoids of increasing frequency in u plus observation
/// noise. The correlated copies give the network's random projections steep
/// effective slopes along u, so each added component genuinely costs hidden
/// units, while the frequencies stay low enough that the largest count in a
/// [1, 60] sweep can still fit the wiggliest target.
inline elmeta::Dataset make_sine_dataset(const std::string& name, std::size_t rows,
                                         int components, std::uint64_t seed,
                                         double noise = 0.15) {
    std::mt19937_64 rng(seed);
    const std::size_t n_copies = 6;
    const double jitter = 0.05;
    std::vector<std::vector<double>> x(n_copies, std::vector<double>(rows));
    std::vector<double> phases(static_cast<std::size_t>(components));
    for (auto& p : phases) p = elmeta::uniform_range(rng, 0.0, 2.0 * std::numbers::pi);
    std::vector<double> y(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        double u = elmeta::uniform_range(rng, -1.0, 1.0);
        for (std::size_t j = 0; j < n_copies; ++j)
            x[j][i] = u + jitter * elmeta::uniform_range(rng, -1.0, 1.0);
        double v = 0.0;
        for (int k = 0; k < components; ++k) {
            double freq = 0.25 + 0.08 * static_cast<double>(k);
            v += std::sin(2.0 * std::numbers::pi * freq * u +
                          phases[static_cast<std::size_t>(k)]);
        }
        y[i] = v + noise * (2.0 * elmeta::uniform_unit(rng) - 1.0);
    }
    std::vector<std::pair<std::string, std::vector<double>>> cols;
    for (std::size_t j = 0; j < n_copies; ++j)
        cols.emplace_back("x" + std::to_string(j + 1), std::move(x[j]));
    return from_columns(name, std::move(cols), std::move(y));
}

inline elmeta::Dataset make_linear_dataset(const std::string& name, std::size_t rows,
                                           std::size_t n_features, std::uint64_t seed,
                                           double noise = 0.0) {
    std::mt19937_64 rng(seed);
    std::vector<std::pair<std::string, std::vector<double>>> cols(n_features);
    for (std::size_t j = 0; j < n_features; ++j) {
        cols[j].first = "x" + std::to_string(j + 1);
        cols[j].second.resize(rows);
    }
    std::vector<double> coefs(n_features);
    for (auto& c : coefs) c = elmeta::uniform_range(rng, -2.0, 2.0);
    std::vector<double> y(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        double v = 0.3;
        for (std::size_t j = 0; j < n_features; ++j) {
            double xv = elmeta::uniform_range(rng, -1.0, 1.0);
            cols[j].second[i] = xv;
            v += coefs[j] * xv;
        }
        v += noise * (2.0 * elmeta::uniform_unit(rng) - 1.0);
        y[i] = v;
    }
    return from_columns(name, std::move(cols), std::move(y));
}

/// Small random dataset (continuous columns only) for oracle comparisons.
inline elmeta::Dataset random_small_dataset(std::mt19937_64& rng, const std::string& name) {
    std::size_t rows = 10 + static_cast<std::size_t>(rng() % 40);
    std::size_t n_features = 1 + static_cast<std::size_t>(rng() % 4);
    std::vector<std::pair<std::string, std::vector<double>>> cols(n_features);
    for (std::size_t j = 0; j < n_features; ++j) {
        cols[j].first = "a" + std::to_string(j);
        cols[j].second.resize(rows);
        for (auto& v : cols[j].second) v = elmeta::uniform_range(rng, -5.0, 5.0);
    }
    std::vector<double> y(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        y[i] = elmeta::uniform_range(rng, -10.0, 10.0);
        for (std::size_t j = 0; j < n_features; ++j) y[i] += 0.5 * cols[j].second[i];
    }
    return from_columns(name, std::move(cols), std::move(y));
}

/// Random meta-base; labels lie inside the provenance sweep range.
inline elmeta::MetaBase random_metabase(std::size_t n, std::uint64_t seed, int n_min = 1,
                                        int n_max = 300) {
    std::mt19937_64 rng(seed);
    elmeta::MetaBase mb;
    mb.provenance.sweep_config.n_min = n_min;
    mb.provenance.sweep_config.n_max = n_max;
    for (std::size_t i = 0; i < n; ++i) {
        elmeta::MetaExample e;
        e.dataset_name = "ds" + std::to_string(i);
        for (auto& v : e.features) v = elmeta::uniform_range(rng, -3.0, 3.0);
        e.label = n_min + static_cast<int>(rng() % static_cast<std::uint64_t>(n_max - n_min + 1));
        mb.examples.push_back(std::move(e));
    }
    return mb;
}

/// Meta-base whose labels are a smooth function of the features plus noise,
/// so learners have something to learn.
inline elmeta::MetaBase structured_metabase(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    elmeta::MetaBase mb;
    mb.provenance.sweep_config.n_min = 1;
    mb.provenance.sweep_config.n_max = 300;
    for (std::size_t i = 0; i < n; ++i) {
        elmeta::MetaExample e;
        e.dataset_name = "ds" + std::to_string(i);
        for (auto& v : e.features) v = elmeta::uniform_range(rng, 0.0, 1.0);
        double signal = 120.0 * e.features[0] + 60.0 * std::sin(3.0 * e.features[1]) +
                        40.0 * e.features[2];
        signal += elmeta::uniform_range(rng, -10.0, 10.0);
        e.label = std::clamp(static_cast<int>(std::lround(signal)), 1, 300);
        mb.examples.push_back(std::move(e));
    }
    return mb;
}

} // namespace synthetic
