#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace elmeta::stats {

inline double mean(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("mean: empty input");
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

/// k-th central moment with 1/n weighting.
inline double central_moment(std::span<const double> xs, int k) {
    double m = mean(xs);
    double s = 0.0;
    for (double x : xs) s += std::pow(x - m, k);
    return s / static_cast<double>(xs.size());
}

inline double variance_population(std::span<const double> xs) {
    return central_moment(xs, 2);
}

/// Sample standard deviation (n-1 denominator).
inline double stddev_sample(std::span<const double> xs) {
    std::size_t n = xs.size();
    if (n < 2) return 0.0;
    double m = mean(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(n - 1));
}

/// Moment-form sample skewness m3 / m2^1.5. Zero-variance input is the
/// caller's degenerate case; nullopt signals it instead of dividing by zero.
inline std::optional<double> skewness(std::span<const double> xs) {
    if (xs.size() < 3) return std::nullopt;
    double m2 = central_moment(xs, 2);
    if (m2 <= 0.0) return std::nullopt;
    double m3 = central_moment(xs, 3);
    return m3 / std::pow(m2, 1.5);
}

/// Excess kurtosis m4 / m2^2 - 3.
inline std::optional<double> kurtosis(std::span<const double> xs) {
    if (xs.size() < 3) return std::nullopt;
    double m2 = central_moment(xs, 2);
    if (m2 <= 0.0) return std::nullopt;
    double m4 = central_moment(xs, 4);
    return m4 / (m2 * m2) - 3.0;
}

/// Linear-interpolation quantile on sorted data (the R-7 rule: h = (n-1)p).
inline double quantile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("quantile: empty input");
    if (p <= 0.0) return sorted.front();
    if (p >= 1.0) return sorted.back();
    double h = static_cast<double>(sorted.size() - 1) * p;
    std::size_t lo = static_cast<std::size_t>(h);
    double frac = h - static_cast<double>(lo);
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline double quantile(std::span<const double> xs, double p) {
    std::vector<double> sorted(xs.begin(), xs.end());
    std::sort(sorted.begin(), sorted.end());
    return quantile_sorted(sorted, p);
}

struct Quartiles {
    double q1 = 0.0;
    double q3 = 0.0;
    double iqr() const { return q3 - q1; }
};

inline Quartiles quartiles(std::span<const double> xs) {
    std::vector<double> sorted(xs.begin(), xs.end());
    std::sort(sorted.begin(), sorted.end());
    return {quantile_sorted(sorted, 0.25), quantile_sorted(sorted, 0.75)};
}

/// Sample Pearson correlation; nullopt when either side has zero variance.
inline std::optional<double> pearson(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("pearson: length mismatch");
    if (xs.size() < 2) return std::nullopt;
    double mx = mean(xs), my = mean(ys);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double dx = xs[i] - mx, dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
    return sxy / std::sqrt(sxx * syy);
}

} // namespace elmeta::stats
