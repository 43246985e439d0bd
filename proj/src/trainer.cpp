#include "bernflow/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

namespace bernflow {

namespace {

const Interval kUnit{};
constexpr std::size_t kChunkSize = 32;

// Batch-invariant pieces: flat offsets and the free couplings' coefficients.
struct Prepared {
    struct Layer {
        std::vector<std::size_t> offset;      // per position, into the flat vector
        std::vector<double> free_alpha;
        std::optional<MonotoneInverter> free_inverter;
    };
    std::vector<Layer> layers;
    std::size_t param_count = 0;
};

Prepared prepare(const FlowModel& model, const RootConfig& cfg) {
    Prepared p;
    std::size_t offset = 0;
    for (const auto& layer : model.layers) {
        Prepared::Layer pl;
        for (int k = 0; k < layer.dimension(); ++k) {
            const auto& c = layer.couplings[k];
            pl.offset.push_back(offset);
            offset += c.is_free() ? c.free_raw.size() : c.net->parameter_count();
        }
        pl.free_alpha = coupling_coefficients(layer, 0, {});
        pl.free_inverter.emplace(BernsteinPoly(pl.free_alpha, kUnit), cfg);
        p.layers.push_back(std::move(pl));
    }
    p.param_count = offset;
    return p;
}

struct TapeEntry {
    double z = 0.0;
    double slope = 0.0;
    std::vector<double> alpha;  // net couplings only
    std::vector<double> raw;
    ConditionerNet::Cache cache;
};

// Per-worker accumulators and scratch space.
struct Accumulator {
    double loss = 0.0;
    std::vector<double> grad;
    std::vector<std::vector<double>> free_alpha_grad;  // per layer

    std::vector<std::vector<TapeEntry>> tape;          // [layer][position]
    std::vector<std::vector<double>> u;                // u^0 .. u^m
    std::vector<std::vector<double>> ubar;
    std::vector<double> bn, bn1, bn2, abar, raw_grad, prefix, prefix_grad;

    Accumulator(const FlowModel& model, const Prepared& prep) {
        const int d = model.dimension();
        const std::size_t m = model.layers.size();
        grad.assign(prep.param_count, 0.0);
        tape.resize(m);
        for (std::size_t i = 0; i < m; ++i) {
            free_alpha_grad.emplace_back(model.layers[i].degree + 1, 0.0);
            tape[i].resize(d);
        }
        u.assign(m + 1, std::vector<double>(d));
        ubar.assign(m + 1, std::vector<double>(d));
        bn.resize(kMaxDegree + 1);
        bn1.resize(kMaxDegree + 1);
        bn2.resize(kMaxDegree + 1);
        abar.resize(kMaxDegree + 1);
        raw_grad.resize(kMaxDegree + 1);
        prefix.reserve(d);
        prefix_grad.resize(d);
    }

    void clear() {
        loss = 0.0;
        std::fill(grad.begin(), grad.end(), 0.0);
        for (auto& g : free_alpha_grad) std::fill(g.begin(), g.end(), 0.0);
    }

    void add(const Accumulator& other) {
        loss += other.loss;
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += other.grad[i];
        for (std::size_t l = 0; l < free_alpha_grad.size(); ++l) {
            for (std::size_t k = 0; k < free_alpha_grad[l].size(); ++k) {
                free_alpha_grad[l][k] += other.free_alpha_grad[l][k];
            }
        }
    }
};

// Loss of one sample, l = -log p(x), recorded on the tape. The inverse runs
// the final layer first; u[i] is the input of layer i.
double tape_forward(const FlowModel& model, const Prepared& prep, std::span<const double> x, const RootConfig& cfg,
                    Accumulator& acc) {
    const std::size_t m = model.layers.size();
    if (!model.diffeo.in_image(x)) throw DomainError("sample outside the support of the model");
    acc.u[m] = model.diffeo.inverse(x);
    double loss = model.diffeo.log_jacobian(acc.u[m]);
    for (std::size_t ii = m; ii-- > 0;) {
        const FlowLayer& layer = model.layers[ii];
        const auto& target = acc.u[ii + 1];
        auto& out = acc.u[ii];
        acc.prefix.clear();
        for (int k = 0; k < layer.dimension(); ++k) {
            const int j = layer.dim_at(k);
            TapeEntry& e = acc.tape[ii][k];
            double z;
            if (k == 0) {
                z = prep.layers[ii].free_inverter->invert(target[j]).z;
                e.slope = eval_with_derivative(prep.layers[ii].free_inverter->poly(), z).slope;
            } else {
                e.raw = layer.couplings[k].net->forward(acc.prefix, &e.cache);
                e.alpha = to_coefficients(e.raw, layer.out_range[j], layer.scheme, layer.degree);
                const BernsteinPoly poly(e.alpha, kUnit);
                z = invert_monotone(poly, target[j], cfg).z;
                e.slope = eval_with_derivative(poly, z).slope;
            }
            e.z = z;
            out[j] = z;
            loss += std::log(e.slope);
            acc.prefix.push_back(z);
        }
    }
    return loss - prior_log_density(model.prior, acc.u[0]);
}

void tape_backward(const FlowModel& model, const Prepared& prep, Accumulator& acc) {
    const std::size_t m = model.layers.size();
    const int d = model.dimension();
    prior_log_density_gradient(model.prior, acc.u[0], acc.ubar[0]);
    for (double& v : acc.ubar[0]) v = -v;
    for (std::size_t i = 0; i < m; ++i) {
        const FlowLayer& layer = model.layers[i];
        const int n = layer.degree;
        auto& ubar = acc.ubar[i];
        auto& xbar = acc.ubar[i + 1];
        std::fill(xbar.begin(), xbar.end(), 0.0);
        for (int k = d - 1; k >= 0; --k) {
            const int j = layer.dim_at(k);
            const TapeEntry& e = acc.tape[i][k];
            const std::vector<double>& alpha = k == 0 ? prep.layers[i].free_alpha : e.alpha;
            const double t = e.z;
            basis_vector(n, t, acc.bn);
            basis_vector(n - 1, t, acc.bn1);
            double curvature = 0.0;
            if (n >= 2) {
                basis_vector(n - 2, t, acc.bn2);
                for (int q = 0; q <= n - 2; ++q) {
                    curvature += (alpha[q + 2] - 2.0 * alpha[q + 1] + alpha[q]) * acc.bn2[q];
                }
                curvature *= static_cast<double>(n) * (n - 1);
            }
            const double inv_slope = 1.0 / e.slope;
            // l picks up log B'(z); z itself depends on x and alpha through B(z) = x.
            const double zbar = ubar[j] + curvature * inv_slope;
            xbar[j] += zbar * inv_slope;
            for (int q = 0; q <= n; ++q) {
                const double lower = q > 0 ? acc.bn1[q - 1] : 0.0;
                const double upper = q < n ? acc.bn1[q] : 0.0;
                acc.abar[q] = (n * (lower - upper) - zbar * acc.bn[q]) * inv_slope;
            }
            if (k == 0) {
                auto& g = acc.free_alpha_grad[i];
                for (int q = 0; q <= n; ++q) g[q] += acc.abar[q];
                continue;
            }
            std::fill(acc.raw_grad.begin(), acc.raw_grad.begin() + (n - 1), 0.0);
            accumulate_raw_gradient(e.raw, layer.out_range[j], layer.scheme, n, std::span(acc.abar).first(n + 1),
                                    std::span(acc.raw_grad).first(n - 1));
            const auto& net = *layer.couplings[k].net;
            std::fill(acc.prefix_grad.begin(), acc.prefix_grad.begin() + k, 0.0);
            net.backward(e.cache, std::span(acc.raw_grad).first(n - 1),
                         std::span(acc.grad).subspan(prep.layers[i].offset[k], net.parameter_count()),
                         std::span(acc.prefix_grad).first(k));
            for (int q = 0; q < k; ++q) ubar[layer.dim_at(q)] += acc.prefix_grad[q];
        }
    }
}

int resolve_threads(int threads) {
    if (threads > 0) return threads;
    return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace

void TrainConfig::validate() const {
    if (!(lr0 > 0.0) || !std::isfinite(lr0)) throw InvalidArgument("TrainConfig: lr0 must be positive");
    if (!(decay_factor > 0.0 && decay_factor <= 1.0)) throw InvalidArgument("TrainConfig: decay_factor must be in (0,1]");
    if (decay_every < 1) throw InvalidArgument("TrainConfig: decay_every must be >= 1");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw InvalidArgument("TrainConfig: Adam betas must be in [0,1)");
    }
    if (!(eps_adam > 0.0)) throw InvalidArgument("TrainConfig: eps_adam must be positive");
    if (batch_size < 1) throw InvalidArgument("TrainConfig: batch_size must be >= 1");
    if (max_iters < 0) throw InvalidArgument("TrainConfig: max_iters must be >= 0");
    if (grad_clip && !(*grad_clip > 0.0)) throw InvalidArgument("TrainConfig: grad_clip must be positive");
    root.validate();
}

double TrainConfig::learning_rate(int iteration) const {
    return lr0 * std::pow(decay_factor, iteration / decay_every);
}

std::size_t TrainHistory::nonfinite_count() const {
    return static_cast<std::size_t>(std::count(nonfinite.begin(), nonfinite.end(), true));
}

void TrainHistory::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw InvalidArgument("cannot open '" + path + "' for writing");
    out.precision(17);
    out << "iteration,nll,grad_norm,lr,nonfinite\n";
    for (std::size_t i = 0; i < size(); ++i) {
        out << i << ',' << nll[i] << ',' << grad_norm[i] << ',' << lr[i] << ',' << (nonfinite[i] ? 1 : 0) << '\n';
    }
    if (!out) throw InvalidArgument("write failed for '" + path + "'");
}

TrainHistory TrainHistory::read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open '" + path + "'");
    TrainHistory h;
    std::string line;
    std::getline(in, line);
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 5) throw InvalidArgument(path + ": row " + std::to_string(row) + " needs 5 fields");
        try {
            h.nll.push_back(std::stod(fields[1]));
            h.grad_norm.push_back(std::stod(fields[2]));
            h.lr.push_back(std::stod(fields[3]));
            h.nonfinite.push_back(fields[4] == "1");
        } catch (const std::logic_error&) {
            throw InvalidArgument(path + ": row " + std::to_string(row) + " has a non-numeric field");
        }
    }
    return h;
}

double mean_nll(const FlowModel& model, const Matrix& batch, const RootConfig& cfg) {
    if (batch.rows() == 0) throw InvalidArgument("mean_nll: empty batch");
    const auto lp = log_density(model, batch, cfg);
    double sum = 0.0;
    for (double v : lp) sum -= v;
    return sum / static_cast<double>(lp.size());
}

LossAndGradient nll_and_gradients(const FlowModel& model, const Matrix& batch, const RootConfig& cfg, int threads) {
    if (batch.rows() == 0) throw InvalidArgument("nll_and_gradients: empty batch");
    if (batch.cols() != static_cast<std::size_t>(model.dimension())) {
        throw InvalidArgument("nll_and_gradients: batch dimension mismatch");
    }
    cfg.validate();
    const Prepared prep = prepare(model, cfg);
    const std::size_t rows = batch.rows();
    const std::size_t chunks = (rows + kChunkSize - 1) / kChunkSize;
    const int workers = std::min<int>(resolve_threads(threads), static_cast<int>(chunks));

    // One accumulator per chunk so the reduction order is independent of
    // scheduling.
    std::vector<Accumulator> partial;
    partial.reserve(chunks);
    for (std::size_t c = 0; c < chunks; ++c) partial.emplace_back(model, prep);
    std::vector<std::exception_ptr> errors(chunks);
    std::atomic<std::size_t> next{0};

    auto work = [&] {
        for (std::size_t c = next++; c < chunks; c = next++) {
            Accumulator& acc = partial[c];
            const std::size_t end = std::min(rows, (c + 1) * kChunkSize);
            std::size_t i = c * kChunkSize;
            try {
                for (; i < end; ++i) {
                    acc.loss += tape_forward(model, prep, batch.row(i), cfg, acc);
                    tape_backward(model, prep, acc);
                }
            } catch (const DomainError& e) {
                errors[c] = std::make_exception_ptr(DomainError("sample " + std::to_string(i) + ": " + e.what()));
            } catch (const std::exception& e) {
                errors[c] = std::make_exception_ptr(
                    NumericError("sample " + std::to_string(i) + ": " + e.what()));
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    // Fixed-topology pairwise reduction.
    for (std::size_t stride = 1; stride < chunks; stride *= 2) {
        for (std::size_t c = 0; c + stride < chunks; c += 2 * stride) partial[c].add(partial[c + stride]);
    }
    Accumulator& total = partial[0];
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const FlowLayer& layer = model.layers[i];
        const auto& raw = layer.couplings[0].free_raw;
        accumulate_raw_gradient(raw, layer.out_range[layer.dim_at(0)], layer.scheme, layer.degree,
                                total.free_alpha_grad[i],
                                std::span(total.grad).subspan(prep.layers[i].offset[0], raw.size()));
    }
    const double scale = 1.0 / static_cast<double>(rows);
    for (double& g : total.grad) g *= scale;
    return {total.loss * scale, std::move(total.grad)};
}

void adam_step(std::vector<double>& params, AdamState& state, std::span<const double> grad, int iteration,
               const TrainConfig& cfg) {
    if (grad.size() != params.size()) throw InvalidArgument("adam_step: gradient size mismatch");
    if (state.m.empty()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    }
    if (state.m.size() != params.size()) throw InvalidArgument("adam_step: state size mismatch");
    ++state.steps;
    const double lr = cfg.learning_rate(iteration);
    const double c1 = 1.0 - std::pow(cfg.beta1, state.steps);
    const double c2 = 1.0 - std::pow(cfg.beta2, state.steps);
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grad[i];
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
        const double mhat = state.m[i] / c1;
        const double vhat = state.v[i] / c2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps_adam);
    }
}

TrainResult train(FlowModel model, const Matrix& data, const TrainConfig& cfg) {
    cfg.validate();
    model.validate();
    if (data.rows() == 0) throw InvalidArgument("train: empty dataset");
    if (data.cols() != static_cast<std::size_t>(model.dimension())) {
        throw InvalidArgument("train: data dimension does not match the model");
    }
    std::vector<double> params = get_parameters(model);
    AdamState adam;
    TrainHistory history;
    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(data.rows());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::size_t cursor = order.size();  // forces a shuffle on the first batch
    int consecutive_failures = 0;
    const std::size_t batch_size = std::min(cfg.batch_size, data.rows());

    for (int it = 0; it < cfg.max_iters; ++it) {
        if (cursor >= order.size()) {
            std::shuffle(order.begin(), order.end(), rng);
            cursor = 0;
        }
        const std::size_t take = std::min(batch_size, order.size() - cursor);
        Matrix batch(take, data.cols());
        for (std::size_t r = 0; r < take; ++r) {
            const auto src = data.row(order[cursor + r]);
            std::copy(src.begin(), src.end(), batch.row(r).begin());
        }
        cursor += take;

        const double lr = cfg.learning_rate(it);
        double loss = std::numeric_limits<double>::quiet_NaN();
        double norm = std::numeric_limits<double>::quiet_NaN();
        std::string failure;
        std::vector<double> grad;
        try {
            auto lg = nll_and_gradients(model, batch, cfg.root, cfg.threads);
            loss = lg.nll;
            grad = std::move(lg.grad);
            double sq = 0.0;
            for (double g : grad) sq += g * g;
            norm = std::sqrt(sq);
            if (!std::isfinite(loss) || !std::isfinite(norm)) failure = "non-finite loss or gradient";
        } catch (const NumericError& e) {
            failure = e.what();
        } catch (const DomainError& e) {
            failure = e.what();
        }
        history.nll.push_back(loss);
        history.grad_norm.push_back(norm);
        history.lr.push_back(lr);
        history.nonfinite.push_back(!failure.empty());
        if (!failure.empty()) {
            if (++consecutive_failures >= 3) {
                throw TrainingAborted("training aborted at iteration " + std::to_string(it) +
                                          " after 3 consecutive non-finite iterations: " + failure,
                                      std::move(history));
            }
            continue;
        }
        consecutive_failures = 0;
        if (cfg.grad_clip && norm > *cfg.grad_clip) {
            const double s = *cfg.grad_clip / norm;
            for (double& g : grad) g *= s;
        }
        adam_step(params, adam, grad, it, cfg);
        set_parameters(model, params);
    }
    return {std::move(model), std::move(history)};
}

AuditReport finite_difference_audit(const FlowModel& model, const Matrix& batch, double step, std::uint64_t seed) {
    if (!(step > 0.0)) throw InvalidArgument("finite_difference_audit: step must be positive");
    // Tight root tolerances keep solver noise far below the difference quotient.
    RootConfig tight;
    tight.tol_x = 1e-15;
    tight.tol_f_rel = 1e-16;
    tight.max_iter = 200;
    const auto analytic = nll_and_gradients(model, batch, tight, 1);
    const auto groups = parameter_groups(model);
    const std::vector<double> base = get_parameters(model);
    const std::size_t total = base.size();

    std::vector<std::size_t> coords(total);
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (total > 500) {
        std::mt19937_64 rng(seed);
        std::shuffle(coords.begin(), coords.end(), rng);
        coords.resize(200);
        std::sort(coords.begin(), coords.end());
    }

    AuditReport report;
    report.total = total;
    FlowModel probe = model;
    std::vector<double> params = base;
    for (std::size_t c : coords) {
        params[c] = base[c] + step;
        set_parameters(probe, params);
        const double up = mean_nll(probe, batch, tight);
        params[c] = base[c] - step;
        set_parameters(probe, params);
        const double down = mean_nll(probe, batch, tight);
        params[c] = base[c];
        const double fd = (up - down) / (2.0 * step);
        const double an = analytic.grad[c];
        const double err = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-3});
        report.max_rel_error = std::max(report.max_rel_error, err);
        if (groups[c] == ParamGroup::FreeCoefficients) {
            report.max_rel_error_free = std::max(report.max_rel_error_free, err);
        } else {
            report.max_rel_error_net = std::max(report.max_rel_error_net, err);
        }
        ++report.checked;
    }
    return report;
}

}  // namespace bernflow
