#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "elmeta/common.hpp"
#include "elmeta/stats.hpp"
#include "support/oracles.hpp"

using namespace elmeta;

TEST_CASE("skewness of symmetric data is zero") {
    std::vector<double> xs{1, 2, 3, 4, 5};
    REQUIRE(stats::skewness(xs).value() == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("skewness of {0,0,0,1} matches the moment formula") {
    // m2 = 3/16, m3 = 3/32 -> m3 / m2^1.5 = 2/sqrt(3); frozen from the oracle
    std::vector<double> xs{0, 0, 0, 1};
    const double frozen = 1.1547005383792515;
    REQUIRE(oracle::skewness(xs) == Catch::Approx(frozen).epsilon(1e-12));
    REQUIRE(stats::skewness(xs).value() == Catch::Approx(frozen).epsilon(1e-12));
}

TEST_CASE("skewness is translation invariant") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> xs(25), shifted(25);
        double c = uniform_range(rng, -100.0, 100.0);
        for (std::size_t i = 0; i < xs.size(); ++i) {
            xs[i] = uniform_range(rng, -10.0, 10.0);
            shifted[i] = xs[i] + c;
        }
        REQUIRE(stats::skewness(xs).value() ==
                Catch::Approx(stats::skewness(shifted).value()).margin(1e-9));
    }
}

TEST_CASE("skewness degenerates on zero variance") {
    std::vector<double> xs{3, 3, 3, 3};
    REQUIRE_FALSE(stats::skewness(xs).has_value());
    REQUIRE_FALSE(stats::kurtosis(xs).has_value());
}

TEST_CASE("kurtosis of the two-point alternating sample is -2") {
    std::vector<double> xs{-1, 1, -1, 1};
    REQUIRE(oracle::kurtosis(xs) == Catch::Approx(-2.0).margin(1e-12));
    REQUIRE(stats::kurtosis(xs).value() == Catch::Approx(-2.0).margin(1e-12));
}

TEST_CASE("kurtosis is invariant under positive scaling") {
    std::mt19937_64 rng(11);
    std::vector<double> xs(40), scaled(40);
    double a = 3.7;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        xs[i] = uniform_range(rng, -5.0, 5.0);
        scaled[i] = a * xs[i];
    }
    REQUIRE(stats::kurtosis(xs).value() ==
            Catch::Approx(stats::kurtosis(scaled).value()).margin(1e-9));
}

TEST_CASE("kurtosis of a large standard normal sample is near zero") {
    // Box-Muller draw, fixed seed
    std::mt19937_64 rng(1234);
    std::vector<double> xs;
    xs.reserve(20000);
    for (int i = 0; i < 10000; ++i) {
        double u1 = uniform_unit(rng);
        double u2 = uniform_unit(rng);
        if (u1 < 1e-300) u1 = 1e-300;
        double r = std::sqrt(-2.0 * std::log(u1));
        xs.push_back(r * std::cos(2.0 * std::numbers::pi * u2));
        xs.push_back(r * std::sin(2.0 * std::numbers::pi * u2));
    }
    REQUIRE(std::abs(stats::kurtosis(xs).value()) < 0.2);
}

TEST_CASE("moments, quartiles and pearson match brute-force oracles") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        std::size_t n = 5 + rng() % 60;
        std::vector<double> xs(n), ys(n);
        for (std::size_t i = 0; i < n; ++i) {
            xs[i] = uniform_range(rng, -20.0, 20.0);
            ys[i] = uniform_range(rng, -20.0, 20.0) + 0.3 * xs[i];
        }
        REQUIRE(stats::skewness(xs).value() ==
                Catch::Approx(oracle::skewness(xs)).margin(1e-9));
        REQUIRE(stats::kurtosis(xs).value() ==
                Catch::Approx(oracle::kurtosis(xs)).margin(1e-9));
        auto q = stats::quartiles(xs);
        REQUIRE(q.q1 == Catch::Approx(oracle::quantile_r7(xs, 0.25)).margin(1e-9));
        REQUIRE(q.q3 == Catch::Approx(oracle::quantile_r7(xs, 0.75)).margin(1e-9));
        REQUIRE(stats::pearson(xs, ys).value() ==
                Catch::Approx(oracle::pearson(xs, ys)).margin(1e-9));
    }
}

TEST_CASE("pearson hits the exact endpoints") {
    std::vector<double> xs{1, 2, 3, 4};
    std::vector<double> up{3, 5, 7, 9};   // 2x + 1
    std::vector<double> down{-1, -2, -3, -4};
    REQUIRE(stats::pearson(xs, up).value() == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(stats::pearson(xs, down).value() == Catch::Approx(-1.0).margin(1e-12));
}

TEST_CASE("pearson flags zero variance") {
    std::vector<double> xs{1, 1, 1};
    std::vector<double> ys{1, 2, 3};
    REQUIRE_FALSE(stats::pearson(xs, ys).has_value());
}

TEST_CASE("quantile endpoints and midpoints") {
    std::vector<double> xs{10, 20, 30, 40};
    REQUIRE(stats::quantile(xs, 0.0) == 10.0);
    REQUIRE(stats::quantile(xs, 1.0) == 40.0);
    REQUIRE(stats::quantile(xs, 0.5) == Catch::Approx(25.0));
}
