#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "elmeta/common.hpp"
#include "elmeta/dataset.hpp"
#include "elmeta/linalg.hpp"
#include "elmeta/stats.hpp"

namespace elmeta {

/// Tunables of the meta-feature extractor. The values are recorded in every
/// meta-base header; a model trained under one configuration refuses feature
/// vectors extracted under another (hash check).
struct FeatureConfig {
    double cv_sparse_threshold = 0.5;  // CV below this: category 0
    double cv_extreme_threshold = 1.0; // CV at or above this: category 2
    double outlier_iqr_factor = 1.5;   // Tukey fence factor

    std::uint64_t hash() const {
        std::string canon = "feature-config-v1;cv_sparse=" + fmt_double(cv_sparse_threshold) +
                            ";cv_extreme=" + fmt_double(cv_extreme_threshold) +
                            ";iqr_factor=" + fmt_double(outlier_iqr_factor);
        return fnv1a64(canon);
    }
};

inline constexpr std::size_t kMetaFeatureCount = 16;

/// Fixed documented order of the 16 meta-features.
inline constexpr std::array<std::string_view, kMetaFeatureCount> kMetaFeatureNames = {
    "mean_skewness",
    "mean_kurtosis",
    "mean_abs_skewness",
    "max_mean_neighbor_target_distance",
    "max_abs_attr_target_correlation",
    "n_attributes",
    "n_examples",
    "n_continuous_with_outliers",
    "prop_continuous_with_outliers",
    "r2_numeric_only",
    "r2_with_binarized",
    "abs_cv_width_category",
    "cv_width_category",
    "target_has_outliers",
    "outlier_severity",
    "stddev_exceeds_mean",
};

namespace feature_index {
inline constexpr std::size_t mean_skewness = 0;
inline constexpr std::size_t mean_kurtosis = 1;
inline constexpr std::size_t mean_abs_skewness = 2;
inline constexpr std::size_t max_mean_neighbor_target_distance = 3;
inline constexpr std::size_t max_abs_attr_target_correlation = 4;
inline constexpr std::size_t n_attributes = 5;
inline constexpr std::size_t n_examples = 6;
inline constexpr std::size_t n_continuous_with_outliers = 7;
inline constexpr std::size_t prop_continuous_with_outliers = 8;
inline constexpr std::size_t r2_numeric_only = 9;
inline constexpr std::size_t r2_with_binarized = 10;
inline constexpr std::size_t abs_cv_width_category = 11;
inline constexpr std::size_t cv_width_category = 12;
inline constexpr std::size_t target_has_outliers = 13;
inline constexpr std::size_t outlier_severity = 14;
inline constexpr std::size_t stddev_exceeds_mean = 15;
} // namespace feature_index

struct MetaFeatures {
    std::array<double, kMetaFeatureCount> values{};
    std::vector<std::string> warnings; // degenerate sub-feature codes
    std::uint64_t config_hash = 0;
};

// ---------------------------------------------------------------------------
// Individual extractors. Degenerate inputs contribute 0 and a warning code
// instead of aborting extraction.
// ---------------------------------------------------------------------------

/// Max over sorted target values of the mean distance to the (up to two)
/// sorted neighbors; endpoints use their single neighbor.
inline double max_mean_neighbor_distance(std::span<const double> target) {
    if (target.size() < 3)
        throw ValidationError("max_mean_neighbor_distance: need at least 3 values");
    std::vector<double> s(target.begin(), target.end());
    std::sort(s.begin(), s.end());
    double best = 0.0;
    const std::size_t n = s.size();
    for (std::size_t i = 0; i < n; ++i) {
        double m;
        if (i == 0)
            m = s[1] - s[0];
        else if (i == n - 1)
            m = s[n - 1] - s[n - 2];
        else
            m = 0.5 * ((s[i] - s[i - 1]) + (s[i + 1] - s[i]));
        best = std::max(best, m);
    }
    return best;
}

/// Max |Pearson| between any continuous attribute and the target; 0 (flagged
/// by the caller) when no attribute has variance.
inline double max_attr_target_correlation(const Dataset& d, bool* degenerate = nullptr) {
    double best = 0.0;
    bool any = false;
    for (const auto& col : d.features) {
        if (col.kind != ColumnKind::continuous) continue;
        auto r = stats::pearson(col.numeric, d.target.numeric);
        if (!r) continue;
        any = true;
        best = std::max(best, std::abs(*r));
    }
    if (degenerate) *degenerate = !any;
    return any ? best : 0.0;
}

struct OutlierReport {
    std::vector<bool> continuous_attr_has_outliers; // one per continuous attribute
    bool target_has_outliers = false;
    double target_severity = 0.0; // max fence excess / IQR over outlying targets
};

namespace detail {

inline bool column_has_tukey_outliers(std::span<const double> xs, double factor) {
    auto q = stats::quartiles(xs);
    double lo = q.q1 - factor * q.iqr();
    double hi = q.q3 + factor * q.iqr();
    for (double v : xs)
        if (v < lo || v > hi) return true;
    return false;
}

} // namespace detail

/// Tukey-fence outlier scan: a value is an outlier iff it lies outside
/// [Q1 - f*IQR, Q3 + f*IQR]. Target severity is the worst fence excess as a
/// multiple of the IQR (0 when IQR is 0).
inline OutlierReport outlier_flags(const Dataset& d, double iqr_factor = 1.5) {
    OutlierReport rep;
    for (const auto& col : d.features) {
        if (col.kind != ColumnKind::continuous) continue;
        rep.continuous_attr_has_outliers.push_back(
            detail::column_has_tukey_outliers(col.numeric, iqr_factor));
    }
    auto q = stats::quartiles(d.target.numeric);
    double iqr = q.iqr();
    double lo = q.q1 - iqr_factor * iqr;
    double hi = q.q3 + iqr_factor * iqr;
    double severity = 0.0;
    for (double v : d.target.numeric) {
        if (v < lo || v > hi) {
            rep.target_has_outliers = true;
            if (iqr > 0.0) {
                double excess = v < lo ? lo - v : v - hi;
                severity = std::max(severity, excess / iqr);
            }
        }
    }
    rep.target_severity = severity;
    return rep;
}

namespace detail {

/// Design matrix for the R^2 fits: raw numeric columns, plus one-hot bits for
/// symbolic columns when requested.
inline Eigen::MatrixXd r2_design(const Dataset& d, bool include_binarized) {
    std::vector<const Column*> numeric;
    std::vector<const Column*> symbolic;
    for (const auto& c : d.features) {
        if (c.kind == ColumnKind::continuous)
            numeric.push_back(&c);
        else if (include_binarized)
            symbolic.push_back(&c);
    }
    std::size_t p = numeric.size();
    std::vector<std::vector<std::int32_t>> observed_codes;
    for (const auto* c : symbolic) {
        std::vector<bool> seen(c->categories.size(), false);
        for (auto code : c->codes) seen[static_cast<std::size_t>(code)] = true;
        std::vector<std::int32_t> obs;
        for (std::size_t i = 0; i < seen.size(); ++i)
            if (seen[i]) obs.push_back(static_cast<std::int32_t>(i));
        p += obs.size();
        observed_codes.push_back(std::move(obs));
    }
    const auto n = static_cast<Eigen::Index>(d.rows());
    Eigen::MatrixXd x(n, static_cast<Eigen::Index>(p));
    Eigen::Index j = 0;
    for (const auto* c : numeric) {
        for (Eigen::Index i = 0; i < n; ++i) x(i, j) = c->numeric[static_cast<std::size_t>(i)];
        ++j;
    }
    for (std::size_t s = 0; s < symbolic.size(); ++s) {
        for (auto code : observed_codes[s]) {
            for (Eigen::Index i = 0; i < n; ++i)
                x(i, j) = symbolic[s]->codes[static_cast<std::size_t>(i)] == code ? 1.0 : 0.0;
            ++j;
        }
    }
    return x;
}

} // namespace detail

/// R^2 of a multiple linear regression of the target on the selected columns
/// (intercept included, minimum-norm solve on rank deficiency), clamped to
/// [0, 1]. No usable columns or a constant target give 0; n <= p gives 1.
/// Both degenerate paths set the flag.
inline double r_squared(const Dataset& d, bool include_binarized, bool* degenerate = nullptr) {
    if (degenerate) *degenerate = false;
    Eigen::MatrixXd x = detail::r2_design(d, include_binarized);
    if (x.cols() == 0) {
        if (degenerate) *degenerate = true;
        return 0.0;
    }
    const auto n = x.rows();
    if (n <= x.cols()) {
        if (degenerate) *degenerate = true;
        return 1.0;
    }
    Eigen::Map<const Eigen::VectorXd> y(d.target.numeric.data(),
                                        static_cast<Eigen::Index>(d.rows()));
    double y_mean = y.mean();
    double ss_tot = (y.array() - y_mean).square().sum();
    if (ss_tot <= 0.0) {
        if (degenerate) *degenerate = true;
        return 0.0;
    }
    Eigen::MatrixXd design(n, x.cols() + 1);
    design.col(0) = Eigen::VectorXd::Ones(n);
    design.rightCols(x.cols()) = x;
    Eigen::VectorXd sol = linalg::solve_min_norm(design, y);
    double ss_res = (design * sol - y).squaredNorm();
    return std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0);
}

/// Sparsity category of the target's coefficient of variation:
/// 0 below the sparse threshold, 1 up to the extreme threshold, 2 beyond.
/// CV = sample stddev / |mean|; a zero mean counts as extreme.
inline int cv_width_category(std::span<const double> target, bool absolute,
                             const FeatureConfig& cfg = {}) {
    std::vector<double> t(target.begin(), target.end());
    if (absolute)
        for (double& v : t) v = std::abs(v);
    double m = stats::mean(t);
    if (m == 0.0) return 2;
    double cv = stats::stddev_sample(t) / std::abs(m);
    if (cv < cfg.cv_sparse_threshold) return 0;
    if (cv < cfg.cv_extreme_threshold) return 1;
    return 2;
}

/// Assemble the full 16-entry vector from a raw (pre-normalization) dataset.
/// Moment features (f1-f3) and the correlation feature average over
/// continuous attributes only; f6 counts original attributes before
/// binarization.
inline MetaFeatures extract_meta_features(const Dataset& d, const FeatureConfig& cfg = {}) {
    if (d.normalized)
        throw ValidationError("extract_meta_features: expects a raw dataset, '" + d.name +
                              "' is normalized");
    d.validate();
    if (d.rows() < 3)
        throw ValidationError("extract_meta_features: need at least 3 rows");

    MetaFeatures mf;
    mf.config_hash = cfg.hash();
    auto& v = mf.values;
    namespace fi = feature_index;

    double skew_sum = 0.0, kurt_sum = 0.0, abs_skew_sum = 0.0;
    std::size_t n_continuous = 0;
    bool moment_degenerate = false;
    for (const auto& col : d.features) {
        if (col.kind != ColumnKind::continuous) continue;
        ++n_continuous;
        auto sk = stats::skewness(col.numeric);
        auto ku = stats::kurtosis(col.numeric);
        if (sk) {
            skew_sum += *sk;
            abs_skew_sum += std::abs(*sk);
        } else {
            moment_degenerate = true;
        }
        if (ku)
            kurt_sum += *ku;
        else
            moment_degenerate = true;
    }
    if (n_continuous > 0) {
        v[fi::mean_skewness] = skew_sum / static_cast<double>(n_continuous);
        v[fi::mean_kurtosis] = kurt_sum / static_cast<double>(n_continuous);
        v[fi::mean_abs_skewness] = abs_skew_sum / static_cast<double>(n_continuous);
    } else {
        mf.warnings.push_back("no_continuous_attributes");
    }
    if (moment_degenerate) mf.warnings.push_back("zero_variance_attribute");

    v[fi::max_mean_neighbor_target_distance] = max_mean_neighbor_distance(d.target.numeric);

    bool corr_degenerate = false;
    v[fi::max_abs_attr_target_correlation] = max_attr_target_correlation(d, &corr_degenerate);
    if (corr_degenerate && n_continuous > 0) mf.warnings.push_back("no_correlatable_attribute");

    v[fi::n_attributes] = static_cast<double>(d.n_features());
    v[fi::n_examples] = static_cast<double>(d.rows());

    OutlierReport outliers = outlier_flags(d, cfg.outlier_iqr_factor);
    std::size_t n_outlier_attrs = 0;
    for (bool b : outliers.continuous_attr_has_outliers)
        if (b) ++n_outlier_attrs;
    v[fi::n_continuous_with_outliers] = static_cast<double>(n_outlier_attrs);
    v[fi::prop_continuous_with_outliers] =
        static_cast<double>(n_outlier_attrs) / static_cast<double>(std::max<std::size_t>(1, n_continuous));

    bool r2_deg = false;
    v[fi::r2_numeric_only] = r_squared(d, /*include_binarized=*/false, &r2_deg);
    if (r2_deg) mf.warnings.push_back("r2_numeric_degenerate");
    v[fi::r2_with_binarized] = r_squared(d, /*include_binarized=*/true, &r2_deg);
    if (r2_deg) mf.warnings.push_back("r2_binarized_degenerate");

    v[fi::abs_cv_width_category] =
        static_cast<double>(cv_width_category(d.target.numeric, /*absolute=*/true, cfg));
    v[fi::cv_width_category] =
        static_cast<double>(cv_width_category(d.target.numeric, /*absolute=*/false, cfg));

    v[fi::target_has_outliers] = outliers.target_has_outliers ? 1.0 : 0.0;
    v[fi::outlier_severity] = outliers.target_severity;

    double t_mean = stats::mean(d.target.numeric);
    double t_sd = stats::stddev_sample(d.target.numeric);
    v[fi::stddev_exceeds_mean] = t_sd > t_mean ? 1.0 : 0.0;

    return mf;
}

} // namespace elmeta
