#include "bernflow/monotone.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace bernflow;

namespace {

const Scheme kSchemes[] = {Scheme::CumulativePositive, Scheme::ReciprocalSquare};

std::vector<double> random_raw(std::mt19937_64& rng, int n, double scale = 1.0) {
    std::normal_distribution<double> normal(0.0, scale);
    std::vector<double> v(n - 1);
    for (double& x : v) x = normal(rng);
    return v;
}

// Inverse of softplus, for building raw values with chosen increments.
double softplus_inverse(double y) { return std::log(std::expm1(y)); }

}  // namespace

TEST_CASE("scheme names round trip") {
    for (Scheme s : kSchemes) CHECK(scheme_from_string(to_string(s)) == s);
    CHECK_THROWS_AS(scheme_from_string("absolute"), InvalidArgument);
}

TEST_CASE("zero raw values give equally spaced coefficients") {
    const auto a = to_coefficients(std::vector<double>(3, 0.0), Interval{}, Scheme::CumulativePositive, 4);
    const std::vector<double> expected{0.0, 0.25, 0.5, 0.75, 1.0};
    for (int k = 0; k <= 4; ++k) CHECK(a[k] == doctest::Approx(expected[k]).epsilon(1e-14));
}

TEST_CASE("increments proportional to (1, 3)") {
    // The last increment is the fixed reference log 2; the first is a third of it.
    const double v = softplus_inverse(std::log(2.0) / 3.0);
    const auto a = to_coefficients(std::vector<double>{v}, Interval{}, Scheme::CumulativePositive, 2);
    CHECK(a[0] == 0.0);
    CHECK(a[2] == 1.0);
    // 1 / (1 + 3), displaced by at most the gap floor.
    CHECK(std::abs(a[1] - 0.25) <= 1e-6);
}

TEST_CASE("endpoints are pinned and coefficients strictly increasing") {
    std::mt19937_64 rng(41);
    std::uniform_int_distribution<int> degree(1, 100);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int trial = 0; trial < 10000; ++trial) {
        const int n = degree(rng);
        double c = u(rng), d = u(rng);
        if (c > d) std::swap(c, d);
        if (d - c < 1e-3) d = c + 1.0;
        const Interval range(c, d);
        const Scheme s = kSchemes[trial % 2];
        const auto a = to_coefficients(random_raw(rng, n, 3.0), range, s, n);
        REQUIRE(a.size() == static_cast<std::size_t>(n + 1));
        REQUIRE(a.front() == c);
        REQUIRE(a.back() == d);
        REQUIRE(check_strictly_increasing(a));
    }
}

TEST_CASE("extreme raw values keep the gap floor") {
    for (Scheme s : kSchemes) {
        std::vector<double> raw{-800.0, 800.0, -50.0, 1e6, 0.0};
        const auto a = to_coefficients(raw, Interval(0, 1), s, 6);
        CHECK(check_strictly_increasing(a));
        for (std::size_t k = 1; k < a.size(); ++k) CHECK(a[k] - a[k - 1] >= mono_gap(Interval(0, 1)));
    }
}

TEST_CASE("monotone coefficients give a positive derivative") {
    std::mt19937_64 rng(43);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + trial;
        const auto a = to_coefficients(random_raw(rng, n, 2.0), Interval{}, kSchemes[trial % 2], n);
        const auto d = derivative(BernsteinPoly(a));
        for (int g = 1; g < 1000; ++g) REQUIRE(eval(d, g / 1000.0) > 0.0);
    }
}

TEST_CASE("argument validation") {
    CHECK_THROWS_AS(to_coefficients(std::vector<double>{0.0}, Interval{}, Scheme::CumulativePositive, 3),
                    InvalidArgument);
    CHECK_THROWS_AS(to_coefficients(std::vector<double>{NAN}, Interval{}, Scheme::CumulativePositive, 2),
                    InvalidArgument);
    CHECK_THROWS_AS(to_coefficients(std::vector<double>{}, Interval{}, Scheme::CumulativePositive, 0),
                    InvalidArgument);
    const auto one = to_coefficients(std::vector<double>{}, Interval(2.0, 3.0), Scheme::CumulativePositive, 1);
    CHECK(one == std::vector<double>{2.0, 3.0});
}

TEST_CASE("strictness check") {
    CHECK(check_strictly_increasing(std::vector<double>{0.0, 0.25, 1.0}));
    CHECK_FALSE(check_strictly_increasing(std::vector<double>{0.0, 0.25, 0.25}));
    CHECK_FALSE(check_strictly_increasing(std::vector<double>{1.0, 0.0, 2.0}));
    CHECK_FALSE(check_strictly_increasing(std::vector<double>{0.0, 0.5e-6, 1.0}));
    CHECK(check_strictly_increasing(std::vector<double>{0.0, 0.5, 1.0}, 0.5));
}

TEST_CASE("Jacobian rows for pinned endpoints are zero") {
    std::mt19937_64 rng(47);
    for (Scheme s : kSchemes) {
        const int n = 7;
        const auto J = parameterization_jacobian(random_raw(rng, n), Interval(-2, 5), s, n);
        REQUIRE(J.rows() == static_cast<std::size_t>(n + 1));
        REQUIRE(J.cols() == static_cast<std::size_t>(n - 1));
        for (std::size_t j = 0; j < J.cols(); ++j) {
            CHECK(J(0, j) == 0.0);
            CHECK(J(n, j) == 0.0);
        }
    }
}

TEST_CASE("Jacobian matches finite differences") {
    std::mt19937_64 rng(53);
    std::uniform_int_distribution<int> degree(2, 30);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = trial == 0 ? 2 : degree(rng);
        const Scheme s = kSchemes[trial % 2];
        const Interval range(-1.0, 2.0);
        auto raw = random_raw(rng, n);
        const auto J = parameterization_jacobian(raw, range, s, n);
        const double h = 1e-5;
        for (int j = 0; j < n - 1; ++j) {
            const double saved = raw[j];
            raw[j] = saved + h;
            const auto up = to_coefficients(raw, range, s, n);
            raw[j] = saved - h;
            const auto down = to_coefficients(raw, range, s, n);
            raw[j] = saved;
            for (int k = 0; k <= n; ++k) {
                const double fd = (up[k] - down[k]) / (2 * h);
                REQUIRE(std::abs(fd - J(k, j)) <= 1e-6 * std::max(1.0, std::abs(J(k, j))));
            }
        }
    }
}

TEST_CASE("first-order Taylor check") {
    std::mt19937_64 rng(59);
    const int n = 12;
    for (Scheme s : kSchemes) {
        auto raw = random_raw(rng, n);
        const auto J = parameterization_jacobian(raw, Interval{}, s, n);
        const auto base = to_coefficients(raw, Interval{}, s, n);
        const double delta = 1e-5;
        raw[4] += delta;
        const auto moved = to_coefficients(raw, Interval{}, s, n);
        for (int k = 0; k <= n; ++k) CHECK(std::abs(moved[k] - base[k] - delta * J(k, 4)) <= 1e-8);
    }
}

TEST_CASE("O(n) transpose product agrees with the dense Jacobian") {
    std::mt19937_64 rng(61);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 2 + trial;
        const Scheme s = kSchemes[trial % 2];
        const Interval range(0.5, 4.0);
        const auto raw = random_raw(rng, n);
        std::vector<double> g(n + 1);
        for (double& v : g) v = normal(rng);
        const auto J = parameterization_jacobian(raw, range, s, n);
        std::vector<double> fast(n - 1, 0.5);
        accumulate_raw_gradient(raw, range, s, n, g, fast);
        for (int j = 0; j < n - 1; ++j) {
            double dense = 0.5;
            for (int k = 0; k <= n; ++k) dense += J(k, j) * g[k];
            REQUIRE(fast[j] == doctest::Approx(dense).epsilon(1e-10));
        }
    }
}
