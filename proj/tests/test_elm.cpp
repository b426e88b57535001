#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "elmeta/elm.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace elmeta;

TEST_CASE("sigmoid basics") {
    REQUIRE(sigmoid(0.0) == 0.5);
    REQUIRE(sigmoid(1000.0) == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(std::isfinite(sigmoid(-1000.0)));
    std::mt19937_64 rng(3);
    for (int i = 0; i < 50; ++i) {
        // beyond |x| ~ 37 the true value is within half an ulp of the bound
        double x = uniform_range(rng, -30.0, 30.0);
        REQUIRE(sigmoid(x) + sigmoid(-x) == Catch::Approx(1.0).margin(1e-12));
        REQUIRE(sigmoid(x) > 0.0);
        REQUIRE(sigmoid(x) < 1.0);
    }
}

namespace {

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, int rows, int cols, double lo, double hi) {
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = uniform_range(rng, lo, hi);
    return m;
}

Eigen::VectorXd random_vector(std::mt19937_64& rng, int n, double lo, double hi) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = uniform_range(rng, lo, hi);
    return v;
}

} // namespace

TEST_CASE("training is bitwise deterministic in the seed") {
    std::mt19937_64 rng(17);
    Eigen::MatrixXd x = random_matrix(rng, 12, 3, -1.0, 1.0);
    Eigen::VectorXd t = random_vector(rng, 12, 0.0, 1.0);
    ElmModel a = train_elm(x, t, 7, 123);
    ElmModel b = train_elm(x, t, 7, 123);
    REQUIRE(a.input_weights == b.input_weights);
    REQUIRE(a.biases == b.biases);
    REQUIRE(a.output_weights == b.output_weights);

    ElmModel c = train_elm(x, t, 7, 124);
    REQUIRE(a.input_weights != c.input_weights);
}

TEST_CASE("initialization ranges hold") {
    std::mt19937_64 rng(29);
    Eigen::MatrixXd x = random_matrix(rng, 10, 4, -1.0, 1.0);
    Eigen::VectorXd t = random_vector(rng, 10, 0.0, 1.0);
    ElmModel m = train_elm(x, t, 50, 7);
    REQUIRE(m.input_weights.minCoeff() >= -1.0);
    REQUIRE(m.input_weights.maxCoeff() <= 1.0);
    REQUIRE(m.biases.minCoeff() >= 0.0);
    REQUIRE(m.biases.maxCoeff() <= 1.0);
}

TEST_CASE("with as many hidden units as distinct rows the training error vanishes") {
    // interpolation property of random-feature networks; needs enough input
    // dimensions for H to be numerically invertible
    std::mt19937_64 rng(41);
    const int n = 20;
    Eigen::MatrixXd x = random_matrix(rng, n, 10, -1.0, 1.0);
    Eigen::VectorXd t = random_vector(rng, n, 0.0, 1.0);
    ElmModel m = train_elm(x, t, n, 2024);

    Eigen::MatrixXd h = x * m.input_weights.transpose();
    h.rowwise() += m.biases.transpose();
    for (Eigen::Index i = 0; i < h.rows(); ++i)
        for (Eigen::Index j = 0; j < h.cols(); ++j) h(i, j) = sigmoid(h(i, j));
    Eigen::BDCSVD<Eigen::MatrixXd> svd(h);
    const auto& sv = svd.singularValues();
    REQUIRE(sv(sv.size() - 1) > 1e-8 * sv(0)); // H invertible on this fixture

    Eigen::VectorXd pred = predict(m, x);
    REQUIRE(rmse(pred, t).value <= 1e-6);
}

TEST_CASE("output weights match the normal-equation oracle on a tall fixture") {
    std::mt19937_64 rng(55);
    const int n = 5, hidden = 3;
    Eigen::MatrixXd x = random_matrix(rng, n, 2, -1.0, 1.0);
    Eigen::VectorXd t = random_vector(rng, n, 0.0, 1.0);
    ElmModel m = train_elm(x, t, hidden, 99);

    // rebuild H from the model's own weights, then solve H'H b = H't by
    // Gaussian elimination
    std::vector<std::vector<double>> h(n, std::vector<double>(hidden));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < hidden; ++j) {
            double z = m.biases(j);
            for (int c = 0; c < 2; ++c) z += m.input_weights(j, c) * x(i, c);
            h[i][j] = 1.0 / (1.0 + std::exp(-z));
        }
    std::vector<std::vector<double>> hth(hidden, std::vector<double>(hidden, 0.0));
    std::vector<double> htt(hidden, 0.0);
    for (int i = 0; i < n; ++i)
        for (int r = 0; r < hidden; ++r) {
            for (int c = 0; c < hidden; ++c) hth[r][c] += h[i][r] * h[i][c];
            htt[r] += h[i][r] * t(i);
        }
    auto beta = oracle::solve_linear_system(hth, htt);
    for (int j = 0; j < hidden; ++j)
        REQUIRE(m.output_weights(j) == Catch::Approx(beta[static_cast<std::size_t>(j)]).margin(1e-8));
}

TEST_CASE("prediction matches a hand-unrolled single-neuron network") {
    ElmModel m;
    m.hidden_count = 1;
    m.input_dim = 1;
    m.input_weights = Eigen::MatrixXd::Constant(1, 1, 0.5);
    m.biases = Eigen::VectorXd::Constant(1, 0.2);
    m.output_weights = Eigen::VectorXd::Constant(1, 2.0);
    Eigen::MatrixXd x(1, 1);
    x << 1.0;
    double expected = 2.0 * (1.0 / (1.0 + std::exp(-(0.5 * 1.0 + 0.2))));
    REQUIRE(predict(m, x)(0) == Catch::Approx(expected).margin(1e-15));
}

TEST_CASE("zero output weights give zero predictions, repeated rows repeat") {
    std::mt19937_64 rng(61);
    Eigen::MatrixXd x = random_matrix(rng, 6, 2, -1.0, 1.0);
    Eigen::VectorXd t = random_vector(rng, 6, 0.0, 1.0);
    ElmModel m = train_elm(x, t, 4, 5);
    m.output_weights.setZero();
    REQUIRE(predict(m, x).cwiseAbs().maxCoeff() == 0.0);

    ElmModel m2 = train_elm(x, t, 4, 5);
    Eigen::MatrixXd same(3, 2);
    same.row(0) = x.row(0);
    same.row(1) = x.row(0);
    same.row(2) = x.row(0);
    Eigen::VectorXd p = predict(m2, same);
    REQUIRE(p(0) == p(1));
    REQUIRE(p(1) == p(2));
}

TEST_CASE("predict rejects dimension mismatches") {
    std::mt19937_64 rng(71);
    Eigen::MatrixXd x = random_matrix(rng, 5, 3, -1.0, 1.0);
    Eigen::VectorXd t = random_vector(rng, 5, 0.0, 1.0);
    ElmModel m = train_elm(x, t, 2, 1);
    Eigen::MatrixXd wrong = random_matrix(rng, 5, 4, -1.0, 1.0);
    REQUIRE_THROWS_AS(predict(m, wrong), ValidationError);
}

TEST_CASE("rmse basics and oracle agreement") {
    std::vector<double> t{0.5, 0.25, 1.0};
    REQUIRE(rmse(t, t).value == 0.0);
    REQUIRE(rmse(std::vector<double>{0, 1}, std::vector<double>{1, 0}).value ==
            Catch::Approx(1.0).margin(1e-15));
    REQUIRE_THROWS(rmse(std::vector<double>{1}, std::vector<double>{1, 2}));
    REQUIRE_THROWS(rmse(std::vector<double>{}, std::vector<double>{}));

    std::mt19937_64 rng(83);
    std::vector<double> p(100), q(100);
    for (std::size_t i = 0; i < 100; ++i) {
        p[i] = uniform_range(rng, -10.0, 10.0);
        q[i] = uniform_range(rng, -10.0, 10.0);
    }
    REQUIRE(rmse(p, q).value == Catch::Approx(oracle::rmse(p, q)).margin(1e-12));
}

TEST_CASE("least-squares optimality under random perturbations") {
    std::mt19937_64 rng(97);
    for (int trial = 0; trial < 20; ++trial) {
        int n = 8 + static_cast<int>(rng() % 20);
        int l = 2 + static_cast<int>(rng() % 10);
        Eigen::MatrixXd x = random_matrix(rng, n, 2, -1.0, 1.0);
        Eigen::VectorXd t = random_vector(rng, n, 0.0, 1.0);
        ElmModel m = train_elm(x, t, l, 1000 + static_cast<std::uint64_t>(trial));
        Eigen::MatrixXd h(n, l);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < l; ++j)
                h(i, j) = sigmoid(m.input_weights.row(j).dot(x.row(i)) + m.biases(j));
        double base = (h * m.output_weights - t).norm();
        for (int k = 0; k < 20; ++k) {
            Eigen::VectorXd perturbed =
                m.output_weights + random_vector(rng, l, -0.5, 0.5);
            REQUIRE(base <= (h * perturbed - t).norm() + 1e-9);
        }
    }
}

TEST_CASE("mean training error does not grow with capacity") {
    // seed-averaged: more random features fit a fixed nonlinear target better
    auto d = synthetic::make_sine_dataset("capacity", 80, 3, 999, 0.0);
    auto n = normalize(d);
    Eigen::MatrixXd x = feature_matrix(n);
    Eigen::VectorXd t = target_vector(n);
    auto mean_rmse = [&](int l) {
        double s = 0.0;
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            ElmModel m = train_elm(x, t, l, seed);
            s += rmse(predict(m, x), t).value;
        }
        return s / 10.0;
    };
    REQUIRE(mean_rmse(100) <= mean_rmse(10) + 1e-6);
}

TEST_CASE("invalid hidden counts are rejected") {
    std::mt19937_64 rng(13);
    Eigen::MatrixXd x = random_matrix(rng, 4, 1, -1.0, 1.0);
    Eigen::VectorXd t = random_vector(rng, 4, 0.0, 1.0);
    REQUIRE_THROWS_AS(train_elm(x, t, 0, 1), ValidationError);
}

TEST_CASE("model JSON dump carries the dimensions and seed") {
    std::mt19937_64 rng(19);
    Eigen::MatrixXd x = random_matrix(rng, 6, 2, -1.0, 1.0);
    Eigen::VectorXd t = random_vector(rng, 6, 0.0, 1.0);
    ElmModel m = train_elm(x, t, 3, 77);
    auto j = m.to_json();
    REQUIRE(j["d"] == 2);
    REQUIRE(j["L"] == 3);
    REQUIRE(j["seed"] == 77);
    REQUIRE(j["input_weights"].size() == 6);
}
