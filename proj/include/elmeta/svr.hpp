#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "elmeta/common.hpp"
#include "elmeta/linalg.hpp"

namespace elmeta {

enum class SvrKernel { polynomial, rbf };

struct SvrParams {
    SvrKernel kernel = SvrKernel::rbf;
    int degree = 1;      // polynomial
    double coef0 = 0.0;  // polynomial
    double gamma = 0.1;  // rbf
    double C = 1.0;
    double epsilon = 1e-3;
    double tolerance = 1e-3; // KKT stopping tolerance

    void validate() const {
        if (C <= 0.0) throw ValidationError("svr: C must be > 0");
        if (epsilon < 0.0) throw ValidationError("svr: epsilon must be >= 0");
        if (tolerance <= 0.0) throw ValidationError("svr: tolerance must be > 0");
        if (kernel == SvrKernel::rbf && gamma <= 0.0)
            throw ValidationError("svr: gamma must be > 0");
        if (kernel == SvrKernel::polynomial && degree < 1)
            throw ValidationError("svr: degree must be >= 1");
    }

    /// The three documented RBF width presets.
    static std::vector<double> rbf_gamma_presets() { return {0.01, 0.1, 1.0}; }

    nlohmann::json to_json() const {
        return {{"kernel", kernel == SvrKernel::rbf ? "rbf" : "polynomial"},
                {"degree", degree},
                {"coef0", coef0},
                {"gamma", gamma},
                {"C", C},
                {"epsilon", epsilon},
                {"tolerance", tolerance}};
    }
    static SvrParams from_json(const nlohmann::json& j) {
        SvrParams p;
        std::string k = j.value("kernel", std::string("rbf"));
        if (k == "rbf")
            p.kernel = SvrKernel::rbf;
        else if (k == "polynomial" || k == "poly")
            p.kernel = SvrKernel::polynomial;
        else
            throw ValidationError("svr: unknown kernel '" + k + "'");
        p.degree = j.value("degree", p.degree);
        p.coef0 = j.value("coef0", p.coef0);
        p.gamma = j.value("gamma", p.gamma);
        p.C = j.value("C", p.C);
        p.epsilon = j.value("epsilon", p.epsilon);
        p.tolerance = j.value("tolerance", p.tolerance);
        p.validate();
        return p;
    }
};

inline double svr_kernel(const SvrParams& p, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (p.kernel == SvrKernel::rbf) return std::exp(-p.gamma * (a - b).squaredNorm());
    return std::pow(a.dot(b) + p.coef0, p.degree);
}

/// epsilon-insensitive support vector regression in the combined-coefficient
/// form: beta_i = alpha_i - alpha_i^* in [-C, C], sum beta_i = 0,
/// f(x) = sum_i beta_i K(x_i, x) + b.
struct SvrModel {
    SvrParams params;
    Eigen::MatrixXd points; // training inputs, one row each
    Eigen::VectorXd beta;
    double bias = 0.0;
    bool converged = true;

    double predict(const Eigen::VectorXd& x) const {
        double s = bias;
        for (Eigen::Index i = 0; i < points.rows(); ++i)
            if (beta(i) != 0.0) s += beta(i) * svr_kernel(params, points.row(i).transpose(), x);
        return s;
    }
};

namespace detail {

/// Exact maximizer of the pair subproblem: the dual objective restricted to
/// beta_i = t, beta_j = s - t is the piecewise quadratic
///   W(t) = -eta t^2 / 2 + g t - eps (|t| + |s - t|) + const,
/// maximized over the box [max(-C, s-C), min(C, s+C)]. Candidates are the
/// per-orthant stationary points, the kinks 0 and s, and the box ends.
inline double solve_pair_1d(double eta, double g, double s, double eps, double c, double t0) {
    const double lo = std::max(-c, s - c);
    const double hi = std::min(c, s + c);
    auto objective = [&](double t) {
        return -0.5 * eta * t * t + g * t - eps * (std::abs(t) + std::abs(s - t));
    };
    std::vector<double> candidates{lo, hi};
    if (0.0 > lo && 0.0 < hi) candidates.push_back(0.0);
    if (s > lo && s < hi) candidates.push_back(s);
    if (eta > 0.0) {
        for (double s1 : {-1.0, 1.0})
            for (double s2 : {-1.0, 1.0})
                candidates.push_back(std::clamp((g - eps * s1 + eps * s2) / eta, lo, hi));
    }
    double best_t = std::clamp(t0, lo, hi);
    double best_w = objective(best_t);
    for (double t : candidates) {
        double w = objective(t);
        if (w > best_w + 1e-15 * std::max(1.0, std::abs(best_w))) {
            best_w = w;
            best_t = t;
        }
    }
    return best_t;
}

} // namespace detail

/// SMO on the dual: repeatedly pick the pair that most violates the KKT
/// conditions (widest gap between the per-example bounds on the bias) and
/// solve its two-variable subproblem exactly, until the gap closes to the
/// configured tolerance. See Smola & Scholkopf (2004) for the optimality
/// conditions used here.
inline SvrModel svr_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                        const SvrParams& params) {
    params.validate();
    const auto n = x.rows();
    if (n != y.size()) throw ValidationError("svr: row/target count mismatch");
    if (n < 2) throw ValidationError("svr: need at least 2 examples");

    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i; j < n; ++j)
            k(i, j) = k(j, i) = svr_kernel(params, x.row(i).transpose(), x.row(j).transpose());

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd f = y; // f_i = y_i - (K beta)_i

    const double c = params.C;
    const double eps = params.epsilon;
    const double bound_slack = 1e-10 * c;

    // Per-example admissible interval for the bias b; the model is optimal
    // once every interval overlaps.
    auto bias_bounds = [&](Eigen::Index i) {
        double lo = -std::numeric_limits<double>::infinity();
        double hi = std::numeric_limits<double>::infinity();
        double b = beta(i);
        if (std::abs(b) <= bound_slack) {
            lo = f(i) - eps;
            hi = f(i) + eps;
        } else if (b >= c - bound_slack) {
            hi = f(i) - eps;
        } else if (b <= -c + bound_slack) {
            lo = f(i) + eps;
        } else if (b > 0.0) {
            lo = hi = f(i) - eps;
        } else {
            lo = hi = f(i) + eps;
        }
        return std::pair<double, double>{lo, hi};
    };

    SvrModel model;
    model.params = params;
    model.points = x;

    const long max_iter = 20000L + 2000L * static_cast<long>(n);
    int stalls = 0;
    double b_lo = 0.0, b_hi = 0.0;
    for (long iter = 0;; ++iter) {
        Eigen::Index i_up = 0, i_dn = 0;
        double max_lo = -std::numeric_limits<double>::infinity();
        double min_hi = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < n; ++i) {
            auto [lo, hi] = bias_bounds(i);
            if (lo > max_lo) {
                max_lo = lo;
                i_up = i;
            }
            if (hi < min_hi) {
                min_hi = hi;
                i_dn = i;
            }
        }
        b_lo = min_hi;
        b_hi = max_lo;
        if (max_lo - min_hi <= params.tolerance || i_up == i_dn) break;
        if (iter >= max_iter) {
            model.converged = false;
            break;
        }

        const Eigen::Index i = i_up, j = i_dn;
        const double s = beta(i) + beta(j);
        const double eta = k(i, i) + k(j, j) - 2.0 * k(i, j);
        const double g = f(i) - f(j) + eta * beta(i);
        double t = detail::solve_pair_1d(eta, g, s, eps, c, beta(i));
        double delta = t - beta(i);
        if (std::abs(delta) < 1e-14 * std::max(1.0, c)) {
            if (++stalls >= 2) {
                model.converged = false;
                break;
            }
            continue;
        }
        stalls = 0;
        beta(i) = t;
        beta(j) = s - t;
        f -= delta * (k.col(i) - k.col(j));
    }
    if (!model.converged)
        throw std::runtime_error("svr: SMO did not reach the KKT tolerance");

    model.beta = beta;
    model.bias = 0.5 * (b_lo + b_hi);
    if (!std::isfinite(model.bias)) {
        // every coefficient at a bound and intervals one-sided: fall back to
        // matching the mean residual
        double s = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) s += f(i);
        model.bias = s / static_cast<double>(n);
    }
    return model;
}

inline nlohmann::json svr_to_json(const SvrModel& m) {
    nlohmann::json j;
    j["params"] = m.params.to_json();
    j["bias"] = m.bias;
    j["beta"] = std::vector<double>(m.beta.data(), m.beta.data() + m.beta.size());
    nlohmann::json pts = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.points.rows(); ++i) {
        std::vector<double> row(static_cast<std::size_t>(m.points.cols()));
        for (Eigen::Index col = 0; col < m.points.cols(); ++col)
            row[static_cast<std::size_t>(col)] = m.points(i, col);
        pts.push_back(row);
    }
    j["points"] = pts;
    return j;
}

inline SvrModel svr_from_json(const nlohmann::json& j) {
    SvrModel m;
    m.params = SvrParams::from_json(j.at("params"));
    m.bias = j.at("bias").get<double>();
    auto beta = j.at("beta").get<std::vector<double>>();
    m.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size()));
    const auto& pts = j.at("points");
    if (pts.empty()) throw std::runtime_error("svr: model file has no points");
    m.points.resize(static_cast<Eigen::Index>(pts.size()),
                    static_cast<Eigen::Index>(pts[0].size()));
    for (std::size_t i = 0; i < pts.size(); ++i) {
        auto row = pts[i].get<std::vector<double>>();
        for (std::size_t col = 0; col < row.size(); ++col)
            m.points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(col)) = row[col];
    }
    return m;
}

} // namespace elmeta
