#include "bernflow/experiments.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace bernflow;

TEST_CASE("bound target derivatives match finite differences") {
    for (double x : {0.05, 0.3, 0.5, 0.77, 0.95}) {
        const double h = 1e-4;
        const double d1 = (bound_target(x + h) - bound_target(x - h)) / (2 * h);
        CHECK(d1 == doctest::Approx(10 * x * std::pow(1 - x * x, 4)).epsilon(1e-6));
        const double d2 = (bound_target(x + h) - 2 * bound_target(x) + bound_target(x - h)) / (h * h);
        CHECK(bound_target_d2(x) == doctest::Approx(d2).epsilon(1e-5));
        const double d3 = (bound_target_d2(x + h) - bound_target_d2(x - h)) / (2 * h);
        CHECK(bound_target_d3(x) == doctest::Approx(d3).epsilon(1e-6));
    }
    CHECK(bound_target(0.0) == 0.0);
    CHECK(bound_target(1.0) == 1.0);
}

TEST_CASE("bound constants and brackets") {
    const auto c = bound_constants();
    // Independent golden-section maximization of each weighted derivative.
    auto maximize = [](auto g) {
        double best = 0.0;
        for (int i = 1; i < 1000; ++i) {
            double lo = (i - 1) / 1000.0, hi = (i + 1) / 1000.0;
            for (int it = 0; it < 80; ++it) {
                const double a = hi - 0.618033988749895 * (hi - lo), b = lo + 0.618033988749895 * (hi - lo);
                if (g(a) > g(b)) hi = b; else lo = a;
            }
            best = std::max(best, g(0.5 * (lo + hi)));
        }
        return best;
    };
    const double a = maximize([](double x) { return x * (1 - x) * std::abs(bound_target_d2(x)); });
    const double b = maximize([](double x) { return std::pow(x * (1 - x), 1.5) * std::abs(bound_target_d3(x)); });
    CHECK(c.a == doctest::Approx(a).epsilon(1e-6));
    CHECK(c.b == doctest::Approx(b).epsilon(1e-6));
    CHECK(bracket_hi(10) == doctest::Approx(0.2989).epsilon(1e-4));
    CHECK(bracket_lo(10) == doctest::Approx(0.125 + 5 * std::pow(10.0, -1.5)));
    CHECK(error_bound(4, {1.0, 8.0}) == doctest::Approx(0.25 + 1.0));
}

TEST_CASE("average map error quadrature") {
    CHECK(average_map_error([](double x) { return bound_target(x); }) == 0.0);
    // integral of f over [0,1] is 1 - 256/693.
    const double integral = 1.0 - 256.0 / 693.0;
    CHECK(average_map_error([](double) { return 0.0; }, 100000) == doctest::Approx(integral).epsilon(1e-8));
    CHECK_THROWS_AS(average_map_error([](double) { return 0.0; }, 1), InvalidArgument);
}

TEST_CASE("Bernstein operator of the target respects the bound") {
    const auto c = bound_constants();
    for (int n = 5; n <= 100; n += 5) {
        std::vector<double> s(n + 1);
        for (int k = 0; k <= n; ++k) s[k] = bound_target(static_cast<double>(k) / n);
        const auto p = bernstein_operator(s);
        const double err = average_map_error([&](double x) { return eval(p, x); });
        CHECK(err <= bracket_hi(n));
        CHECK(err <= error_bound(n, c));
    }
}

TEST_CASE("small error-bound run") {
    ErrorBoundConfig cfg;
    cfg.degrees = {10};
    cfg.samples = 5000;
    cfg.seed = 1;
    cfg.train.max_iters = 800;
    cfg.train.seed = 1;
    const auto rows = run_error_bound(cfg);
    REQUIRE(rows.size() == 1);
    const auto& r = rows[0];
    CHECK(r.error.empty());
    CHECK(r.n == 10);
    CHECK(r.pass);
    CHECK(r.operator_pass);
    CHECK(r.refinement_ok);
    CHECK(r.in_bracket);
    CHECK(r.avg_error <= r.bound_hi);
    cfg.degrees = {4};
    CHECK_THROWS_AS(run_error_bound(cfg), InvalidArgument);
}

TEST_CASE("condition rows for 2x - 1") {
    const BernsteinPoly p({-1.0, 1.0});
    const auto pw = to_power_basis(p);
    for (double x : {0.0, 0.25, 0.5, 0.9, 1.0}) {
        CHECK(value_condition_number(p, x) == doctest::Approx(1.0));
        CHECK(value_condition_number(pw, x) == doctest::Approx(1.0 + 2.0 * x));
    }
    CHECK(root_condition_number(Basis::Bernstein, p.coeffs(), p.domain(), 0.5, 1) == doctest::Approx(0.5));
    CHECK(root_condition_number(Basis::Power, pw.coeffs(), pw.domain(), 0.5, 1) == doctest::Approx(1.0));
}

TEST_CASE("condition bench") {
    ConditionBenchConfig cfg;
    cfg.polynomials = 200;
    cfg.seed = 3;
    const auto a = run_condition_bench(cfg);
    CHECK(a.value_points == 200u * 100u);
    CHECK(a.value_violations == 0);
    CHECK(a.value_dominance_rate == 1.0);
    CHECK(a.root_violations == 0);
    CHECK(a.roots > 0);
    CHECK(a.value_ratio.min >= 1.0 - 1e-12);
    CHECK(a.value_ratio.min <= a.value_ratio.median);
    CHECK(a.value_ratio.median <= a.value_ratio.max);
    const auto b = run_condition_bench(cfg);
    CHECK(a.value_points == b.value_points);
    CHECK(a.roots == b.roots);
    CHECK(a.value_ratio.median == b.value_ratio.median);
    CHECK(a.root_ratio.max == b.root_ratio.max);
}

TEST_CASE("perturbation check") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> N(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> c(8);
        for (double& v : c) v = N(rng);
        const auto r = perturbation_check(BernsteinPoly(c), 1e-2, 20, 50, trial);
        CHECK(r.points == 20u * 50u);
        CHECK(r.ok());
        CHECK(r.max_ratio_bernstein <= 1.0);
        CHECK(r.max_ratio_power <= 1.0);
    }
}

TEST_CASE("fitting helpers") {
    const MixtureSpec1D two{{-2.0, 2.0}, {0.3, 0.3}, {1.0, 1.0}};
    const auto ds = gaussian_mixture_1d(two, 4000, 7);
    FlowSpec spec;
    spec.degree = 30;
    TrainConfig cfg;
    cfg.max_iters = 400;
    cfg.seed = 2;
    const auto fit = fit_dataset(ds, spec, cfg, 2);
    CHECK(fit.error.empty());
    CHECK(fit.final_nll < fit.initial_nll);
    CHECK(fit.history.size() == 400);
    CHECK(mean_nll(fit.model, ds.original_points()) == doctest::Approx(fit.final_nll).epsilon(1e-10));
    const auto modes = density_modes(fit.model, -4.0, 4.0);
    REQUIRE(modes.size() >= 2);
    CHECK(std::abs(modes.front() + 2.0) < 0.5);
    CHECK(std::abs(modes.back() - 2.0) < 0.5);
}

TEST_CASE("degree sweep") {
    DegreeSweepConfig cfg;
    cfg.degrees = {5, 50};
    cfg.count = 5000;
    cfg.seed = 1;
    cfg.train.max_iters = 500;
    const auto rows = run_degree_sweep(cfg);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].degree == 5);
    CHECK(rows[1].degree == 50);
    for (const auto& r : rows) {
        CHECK(r.error.empty());
        CHECK_FALSE(r.nonfinite);
        CHECK(r.final_nll < r.initial_nll);
    }
    CHECK(rows[1].final_nll <= rows[0].final_nll);
}

TEST_CASE("robustness protocol at small scale") {
    RobustnessConfig cfg;
    cfg.train_count = 1000;
    cfg.test_count = 1000;
    cfg.seeds = {1, 2, 3};
    cfg.model.degree = 15;
    cfg.train.max_iters = 150;
    cfg.perturbations = 10;
    const auto r = run_robustness(cfg);
    CHECK(r.errors.empty());
    CHECK(r.clean_ll.size() == 3);
    for (double v : r.clean_ll) CHECK(std::isfinite(v));
    CHECK(std::isfinite(r.noisy_ll));
    REQUIRE(r.metric.has_value());
    CHECK(*r.metric >= 0.0);
    CHECK_FALSE(r.degenerate);
    CHECK(r.perturbation.ok());

    cfg.noise = 0.0;
    const auto clean = run_robustness(cfg);
    REQUIRE(clean.metric.has_value());
    // Zero noise retrains the first clean seed on identical data.
    CHECK(clean.noisy_ll == doctest::Approx(clean.clean_ll.front()).epsilon(1e-12));
    CHECK(*clean.metric < 1.645);

    cfg.train_csv = "missing.csv";
    CHECK_THROWS_AS(run_robustness(cfg), InvalidArgument);
}
