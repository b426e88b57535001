#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

namespace elmeta::linalg {

/// Minimum-norm least-squares solution of A x ~ b via SVD, treating singular
/// values below rel_threshold * sigma_max as zero. Handles rank-deficient and
/// under-determined systems.
inline Eigen::VectorXd solve_min_norm(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                      double rel_threshold = 1e-10) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(rel_threshold);
    return svd.solve(b);
}

struct OlsFit {
    Eigen::VectorXd coef; // per regressor column
    double intercept = 0.0;
    bool ridge_fallback = false;
};

/// Ordinary least squares of y on X with an intercept. Falls back to a tiny
/// ridge penalty (lambda on the non-intercept block) when X'X is rank
/// deficient.
inline OlsFit ols_with_intercept(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                 double ridge_lambda = 1e-8) {
    const auto n = x.rows();
    const auto p = x.cols();
    Eigen::MatrixXd design(n, p + 1);
    design.col(0) = Eigen::VectorXd::Ones(n);
    design.rightCols(p) = x;

    OlsFit fit;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() == p + 1) {
        Eigen::VectorXd sol = qr.solve(y);
        fit.intercept = sol(0);
        fit.coef = sol.tail(p);
        return fit;
    }
    Eigen::MatrixXd gram = design.transpose() * design;
    for (Eigen::Index j = 1; j <= p; ++j) gram(j, j) += ridge_lambda;
    Eigen::VectorXd sol = gram.ldlt().solve(design.transpose() * y);
    fit.intercept = sol(0);
    fit.coef = sol.tail(p);
    fit.ridge_fallback = true;
    return fit;
}

inline Eigen::VectorXd ols_predict(const OlsFit& fit, const Eigen::MatrixXd& x) {
    return (x * fit.coef).array() + fit.intercept;
}

} // namespace elmeta::linalg
