#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>

#include <json.hpp>

#include "elmeta/common.hpp"
#include "elmeta/dataset.hpp"
#include "elmeta/linalg.hpp"

namespace elmeta {

/// Logistic activation, overflow-safe for large |x|.
inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

/// Single-hidden-layer feedforward network trained by Extreme Learning
/// Machine (Huang, Zhu & Siew 2006): random fixed hidden parameters, output
/// weights by least squares. Immutable after training.
struct ElmModel {
    Eigen::MatrixXd input_weights; // L x d, rows are hidden-unit weight vectors
    Eigen::VectorXd biases;        // L
    Eigen::VectorXd output_weights; // L
    int hidden_count = 0;          // L
    int input_dim = 0;             // d
    std::uint64_t seed = 0;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["d"] = input_dim;
        j["L"] = hidden_count;
        j["seed"] = seed;
        std::vector<double> w(input_weights.data(),
                              input_weights.data() + input_weights.size());
        j["input_weights"] = w; // column-major flatten
        j["biases"] = std::vector<double>(biases.data(), biases.data() + biases.size());
        j["output_weights"] =
            std::vector<double>(output_weights.data(), output_weights.data() + output_weights.size());
        return j;
    }
};

/// Feature matrix of a normalized dataset (all columns continuous), rows are
/// examples.
inline Eigen::MatrixXd feature_matrix(const Dataset& d) {
    const auto n = static_cast<Eigen::Index>(d.rows());
    const auto p = static_cast<Eigen::Index>(d.features.size());
    Eigen::MatrixXd x(n, p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const auto& col = d.features[static_cast<std::size_t>(j)];
        if (col.kind != ColumnKind::continuous)
            throw ValidationError("feature_matrix: symbolic column '" + col.name +
                                  "' (normalize first)");
        for (Eigen::Index i = 0; i < n; ++i)
            x(i, j) = col.numeric[static_cast<std::size_t>(i)];
    }
    return x;
}

inline Eigen::VectorXd target_vector(const Dataset& d) {
    return Eigen::Map<const Eigen::VectorXd>(d.target.numeric.data(),
                                             static_cast<Eigen::Index>(d.rows()));
}

namespace detail {

inline Eigen::MatrixXd hidden_activations(const Eigen::MatrixXd& x, const Eigen::MatrixXd& w,
                                          const Eigen::VectorXd& b) {
    Eigen::MatrixXd h = x * w.transpose();
    h.rowwise() += b.transpose();
    for (Eigen::Index i = 0; i < h.rows(); ++i)
        for (Eigen::Index j = 0; j < h.cols(); ++j) h(i, j) = sigmoid(h(i, j));
    return h;
}

} // namespace detail

/// Train on an explicit feature matrix / target vector. Hidden weights are
/// drawn Uniform[-1, 1], biases Uniform[0, 1], both fully determined by the
/// seed; output weights are the minimum-norm least-squares solution of
/// H beta = t (SVD, relative threshold 1e-10), since H is routinely rank
/// deficient once L approaches the number of training rows.
inline ElmModel train_elm(const Eigen::MatrixXd& x, const Eigen::VectorXd& t, int hidden_count,
                          std::uint64_t seed) {
    if (hidden_count < 1) throw ValidationError("hidden_count must be >= 1");
    if (x.rows() < 1) throw ValidationError("train_elm: no training rows");
    if (x.rows() != t.size()) throw ValidationError("train_elm: row/target count mismatch");

    ElmModel m;
    m.hidden_count = hidden_count;
    m.input_dim = static_cast<int>(x.cols());
    m.seed = seed;

    std::mt19937_64 rng(seed);
    m.input_weights.resize(hidden_count, x.cols());
    for (Eigen::Index j = 0; j < m.input_weights.rows(); ++j)
        for (Eigen::Index k = 0; k < m.input_weights.cols(); ++k)
            m.input_weights(j, k) = uniform_range(rng, -1.0, 1.0);
    m.biases.resize(hidden_count);
    for (Eigen::Index j = 0; j < m.biases.size(); ++j) m.biases(j) = uniform_unit(rng);

    Eigen::MatrixXd h = detail::hidden_activations(x, m.input_weights, m.biases);
    if (!h.allFinite()) throw std::runtime_error("train_elm: non-finite hidden activation");
    m.output_weights = linalg::solve_min_norm(h, t);
    if (!m.output_weights.allFinite())
        throw std::runtime_error("train_elm: non-finite output weights");
    return m;
}

inline ElmModel train_elm(const Dataset& train, int hidden_count, std::uint64_t seed) {
    if (!train.normalized)
        throw ValidationError("train_elm: dataset '" + train.name + "' is not normalized");
    return train_elm(feature_matrix(train), target_vector(train), hidden_count, seed);
}

inline Eigen::VectorXd predict(const ElmModel& m, const Eigen::MatrixXd& x) {
    if (x.cols() != m.input_dim)
        throw ValidationError("predict: expected " + std::to_string(m.input_dim) +
                              " features, got " + std::to_string(x.cols()));
    return detail::hidden_activations(x, m.input_weights, m.biases) * m.output_weights;
}

inline Eigen::VectorXd predict(const ElmModel& m, const Dataset& d) {
    return predict(m, feature_matrix(d));
}

struct RmseScore {
    double value = 0.0;
    std::size_t n = 0;
};

/// RMSE = sqrt( (1/n) * sum (p_i - t_i)^2 ).
inline RmseScore rmse(std::span<const double> predictions, std::span<const double> targets) {
    if (predictions.size() != targets.size())
        throw ValidationError("rmse: length mismatch");
    if (predictions.empty()) throw ValidationError("rmse: empty input");
    double s = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        double e = predictions[i] - targets[i];
        s += e * e;
    }
    return {std::sqrt(s / static_cast<double>(predictions.size())), predictions.size()};
}

inline RmseScore rmse(const Eigen::VectorXd& predictions, const Eigen::VectorXd& targets) {
    return rmse(std::span<const double>(predictions.data(),
                                        static_cast<std::size_t>(predictions.size())),
                std::span<const double>(targets.data(),
                                        static_cast<std::size_t>(targets.size())));
}

} // namespace elmeta
