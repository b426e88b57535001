#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <json.hpp>

#include "elmeta/common.hpp"
#include "elmeta/linalg.hpp"

namespace elmeta {

/// Model-tree parameters in the style of Quinlan (1992) "Learning with
/// continuous classes"; the smoothing constant follows Wang & Witten (1997).
struct M5Params {
    int min_leaf = 4;        // smallest admissible side of a split
    double smoothing_k = 15; // leaf predictions blended with ancestor models
    bool prune = true;

    void validate() const {
        if (min_leaf < 2) throw ValidationError("m5: min_leaf must be >= 2");
        if (smoothing_k < 0) throw ValidationError("m5: smoothing_k must be >= 0");
    }

    nlohmann::json to_json() const {
        return {{"min_leaf", min_leaf}, {"smoothing_k", smoothing_k}, {"prune", prune}};
    }
    static M5Params from_json(const nlohmann::json& j) {
        M5Params p;
        p.min_leaf = j.value("min_leaf", p.min_leaf);
        p.smoothing_k = j.value("smoothing_k", p.smoothing_k);
        p.prune = j.value("prune", p.prune);
        p.validate();
        return p;
    }
};

/// Regression tree grown by standard-deviation reduction with a full linear
/// model at every node. Differs from Quinlan's procedure in one respect: node
/// models regress on all attributes instead of the subtree's split attributes,
/// so a tree pruned to a single leaf is exactly the ordinary least-squares
/// fit. Pruning keeps a subtree only when its size-adjusted error beats the
/// node's own model.
struct M5Model {
    struct Node {
        int left = -1; // -1: leaf
        int right = -1;
        int split_attr = -1;
        double threshold = 0.0;
        double split_sdr = 0.0;
        int n = 0;
        linalg::OlsFit model;
        std::vector<int> rows; // training rows that reached this node
        bool is_leaf() const { return left < 0; }
    };

    M5Params params;
    std::vector<Node> nodes; // nodes[0] is the root
    int input_dim = 0;

    /// Smoothed prediction: the leaf model's value filtered up the path,
    /// p <- (n_child * p + k * q_ancestor) / (n_child + k).
    double predict(const Eigen::VectorXd& x) const {
        if (nodes.empty()) throw ValidationError("m5: empty model");
        std::vector<int> path;
        int idx = 0;
        for (;;) {
            path.push_back(idx);
            const Node& node = nodes[static_cast<std::size_t>(idx)];
            if (node.is_leaf()) break;
            idx = x(node.split_attr) <= node.threshold ? node.left : node.right;
        }
        auto model_value = [&](const Node& node) {
            return node.model.coef.dot(x) + node.model.intercept;
        };
        double p = model_value(nodes[static_cast<std::size_t>(path.back())]);
        const double k = params.smoothing_k;
        for (std::size_t i = path.size() - 1; i-- > 0;) {
            const Node& parent = nodes[static_cast<std::size_t>(path[i])];
            const Node& child = nodes[static_cast<std::size_t>(path[i + 1])];
            p = (static_cast<double>(child.n) * p + k * model_value(parent)) /
                (static_cast<double>(child.n) + k);
        }
        return p;
    }
};

namespace detail {

inline double subset_sd(const Eigen::VectorXd& y, const std::vector<int>& rows) {
    if (rows.empty()) return 0.0;
    double s = 0.0;
    for (int r : rows) s += y(r);
    double m = s / static_cast<double>(rows.size());
    double ss = 0.0;
    for (int r : rows) ss += (y(r) - m) * (y(r) - m);
    return std::sqrt(ss / static_cast<double>(rows.size()));
}

struct BestSplit {
    int attr = -1;
    double threshold = 0.0;
    double sdr = -1.0;
    std::vector<int> left, right;
};

/// Scan every attribute and every midpoint between consecutive distinct
/// values; keep the split with the largest standard-deviation reduction whose
/// sides both hold at least min_leaf rows. First best wins on ties.
inline BestSplit find_best_split(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                 const std::vector<int>& rows, int min_leaf) {
    BestSplit best;
    const auto n = static_cast<double>(rows.size());
    const double sd_all = subset_sd(y, rows);
    if (sd_all <= 0.0) return best;

    for (int attr = 0; attr < x.cols(); ++attr) {
        std::vector<int> order = rows;
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (x(a, attr) != x(b, attr)) return x(a, attr) < x(b, attr);
            return a < b;
        });
        // prefix sums over the sorted order
        double left_sum = 0.0, left_sq = 0.0;
        double total_sum = 0.0, total_sq = 0.0;
        for (int r : order) {
            total_sum += y(r);
            total_sq += y(r) * y(r);
        }
        for (std::size_t i = 0; i + 1 < order.size(); ++i) {
            double yi = y(order[i]);
            left_sum += yi;
            left_sq += yi * yi;
            if (x(order[i], attr) == x(order[i + 1], attr)) continue; // not a boundary
            const double nl = static_cast<double>(i + 1);
            const double nr = n - nl;
            if (nl < min_leaf || nr < min_leaf) continue;
            auto sd_of = [](double sum, double sq, double cnt) {
                double var = sq / cnt - (sum / cnt) * (sum / cnt);
                return std::sqrt(std::max(0.0, var));
            };
            double sdr = sd_all - (nl / n) * sd_of(left_sum, left_sq, nl) -
                         (nr / n) * sd_of(total_sum - left_sum, total_sq - left_sq, nr);
            if (sdr > best.sdr + 1e-15 && sdr > 0.0) {
                best.attr = attr;
                best.threshold = 0.5 * (x(order[i], attr) + x(order[i + 1], attr));
                best.sdr = sdr;
                best.left.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(i + 1));
                best.right.assign(order.begin() + static_cast<std::ptrdiff_t>(i + 1), order.end());
            }
        }
    }
    return best;
}

inline linalg::OlsFit fit_node_model(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                     const std::vector<int>& rows) {
    Eigen::MatrixXd xs(static_cast<Eigen::Index>(rows.size()), x.cols());
    Eigen::VectorXd ys(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        xs.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
        ys(static_cast<Eigen::Index>(i)) = y(rows[i]);
    }
    return linalg::ols_with_intercept(xs, ys);
}

inline double node_model_mae(const M5Model::Node& node, const Eigen::MatrixXd& x,
                             const Eigen::VectorXd& y) {
    double s = 0.0;
    for (int r : node.rows)
        s += std::abs(node.model.coef.dot(x.row(r).transpose()) + node.model.intercept - y(r));
    return s / static_cast<double>(node.rows.size());
}

/// Quinlan's size adjustment (n + v) / (n - v); models with as many
/// parameters as examples are penalized out of contention.
inline double error_factor(int n, int v) {
    if (n <= v) return 1e30;
    return static_cast<double>(n + v) / static_cast<double>(n - v);
}

} // namespace detail

inline M5Model m5_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                      const M5Params& params = {}) {
    params.validate();
    if (x.rows() != y.size()) throw ValidationError("m5: row/target count mismatch");
    if (x.rows() < 2) throw ValidationError("m5: need at least 2 examples");

    M5Model model;
    model.params = params;
    model.input_dim = static_cast<int>(x.cols());

    std::vector<int> all(static_cast<std::size_t>(x.rows()));
    std::iota(all.begin(), all.end(), 0);
    const double root_sd = detail::subset_sd(y, all);

    // grow
    struct Pending {
        int node;
        std::vector<int> rows;
    };
    model.nodes.push_back({});
    std::vector<Pending> stack{{0, std::move(all)}};
    while (!stack.empty()) {
        Pending cur = std::move(stack.back());
        stack.pop_back();
        {
            M5Model::Node& node = model.nodes[static_cast<std::size_t>(cur.node)];
            node.n = static_cast<int>(cur.rows.size());
            node.rows = cur.rows;
            node.model = detail::fit_node_model(x, y, cur.rows);
        }
        if (cur.rows.size() < 2 * static_cast<std::size_t>(params.min_leaf)) continue;
        if (detail::subset_sd(y, cur.rows) < 0.05 * root_sd) continue;
        detail::BestSplit split = detail::find_best_split(x, y, cur.rows, params.min_leaf);
        if (split.attr < 0) continue;

        int left_idx = static_cast<int>(model.nodes.size());
        model.nodes.push_back({});
        int right_idx = static_cast<int>(model.nodes.size());
        model.nodes.push_back({});
        M5Model::Node& node = model.nodes[static_cast<std::size_t>(cur.node)];
        node.left = left_idx;
        node.right = right_idx;
        node.split_attr = split.attr;
        node.threshold = split.threshold;
        node.split_sdr = split.sdr;
        stack.push_back({left_idx, std::move(split.left)});
        stack.push_back({right_idx, std::move(split.right)});
    }

    // prune bottom-up by adjusted error
    if (params.prune) {
        const int v = model.input_dim + 1;
        auto prune = [&](auto&& self, int idx) -> double {
            M5Model::Node& node = model.nodes[static_cast<std::size_t>(idx)];
            double leaf_err =
                detail::node_model_mae(node, x, y) * detail::error_factor(node.n, v);
            if (node.is_leaf()) return leaf_err;
            double left_err = self(self, node.left);
            double right_err = self(self, node.right);
            const auto& l = model.nodes[static_cast<std::size_t>(node.left)];
            const auto& r = model.nodes[static_cast<std::size_t>(node.right)];
            double subtree_err = (static_cast<double>(l.n) * left_err +
                                  static_cast<double>(r.n) * right_err) /
                                 static_cast<double>(node.n);
            if (leaf_err <= subtree_err) {
                node.left = node.right = -1;
                node.split_attr = -1;
                return leaf_err;
            }
            return subtree_err;
        };
        prune(prune, 0);
    }
    return model;
}

inline nlohmann::json m5_to_json(const M5Model& m) {
    nlohmann::json j;
    j["params"] = m.params.to_json();
    j["input_dim"] = m.input_dim;
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : m.nodes) {
        nlohmann::json jn;
        jn["left"] = n.left;
        jn["right"] = n.right;
        jn["split_attr"] = n.split_attr;
        jn["threshold"] = n.threshold;
        jn["n"] = n.n;
        jn["intercept"] = n.model.intercept;
        jn["coef"] = std::vector<double>(n.model.coef.data(), n.model.coef.data() + n.model.coef.size());
        nodes.push_back(jn);
    }
    j["nodes"] = nodes;
    return j;
}

inline M5Model m5_from_json(const nlohmann::json& j) {
    M5Model m;
    m.params = M5Params::from_json(j.at("params"));
    m.input_dim = j.at("input_dim").get<int>();
    for (const auto& jn : j.at("nodes")) {
        M5Model::Node n;
        n.left = jn.at("left").get<int>();
        n.right = jn.at("right").get<int>();
        n.split_attr = jn.at("split_attr").get<int>();
        n.threshold = jn.at("threshold").get<double>();
        n.n = jn.at("n").get<int>();
        n.model.intercept = jn.at("intercept").get<double>();
        auto coef = jn.at("coef").get<std::vector<double>>();
        n.model.coef = Eigen::Map<const Eigen::VectorXd>(coef.data(),
                                                         static_cast<Eigen::Index>(coef.size()));
        m.nodes.push_back(std::move(n));
    }
    if (m.nodes.empty()) throw std::runtime_error("m5: model file has no nodes");
    return m;
}

} // namespace elmeta
