#pragma once

// Maximum-likelihood training with exact gradients.
//
// The inverse pass recovers z = f^{-1}(x) layer by layer; every recovered
// coordinate is defined implicitly by B(z; alpha) = x. Its sensitivities are
//   dz/dx = 1 / B'(z),   dz/dalpha_k = -b_{k,n}(z) / B'(z),
// and the reverse sweep pushes the loss adjoint through these, through the
// log B'(z) terms, the monotone parameterization and the conditioner nets.

#include "bernflow/flow.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bernflow {

struct TrainConfig {
    double lr0 = 0.01;
    double decay_factor = 0.9;
    int decay_every = 50;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps_adam = 1e-8;
    std::size_t batch_size = 512;
    int max_iters = 2000;
    std::uint64_t seed = 0;
    std::optional<double> grad_clip;  // global L2 norm; off by default
    RootConfig root;
    int threads = 0;                  // 0: hardware concurrency

    void validate() const;
    // lr0 * decay_factor^floor(iteration / decay_every), iteration 0-based.
    double learning_rate(int iteration) const;
};

struct TrainHistory {
    std::vector<double> nll;
    std::vector<double> grad_norm;
    std::vector<double> lr;
    std::vector<bool> nonfinite;

    std::size_t size() const noexcept { return nll.size(); }
    std::size_t nonfinite_count() const;
    bool operator==(const TrainHistory&) const = default;

    void write_csv(const std::string& path) const;
    static TrainHistory read_csv(const std::string& path);
};

struct LossAndGradient {
    double nll;                 // mean negative log-likelihood over the batch
    std::vector<double> grad;   // same layout as get_parameters()
};

// Mean NLL without gradients.
double mean_nll(const FlowModel& model, const Matrix& batch, const RootConfig& cfg = {});

LossAndGradient nll_and_gradients(const FlowModel& model, const Matrix& batch, const RootConfig& cfg = {},
                                  int threads = 1);

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    int steps = 0;
};

void adam_step(std::vector<double>& params, AdamState& state, std::span<const double> grad, int iteration,
               const TrainConfig& cfg);

struct TrainResult {
    FlowModel model;
    TrainHistory history;
};

// Raised after three consecutive non-finite iterations; carries the partial
// history for diagnosis.
class TrainingAborted : public NumericError {
public:
    TrainingAborted(const std::string& what, TrainHistory history)
        : NumericError(what), history_(std::move(history)) {}
    const TrainHistory& history() const noexcept { return history_; }

private:
    TrainHistory history_;
};

TrainResult train(FlowModel model, const Matrix& data, const TrainConfig& cfg);

struct AuditReport {
    double max_rel_error = 0.0;
    double max_rel_error_free = 0.0;  // free coupling parameters
    double max_rel_error_net = 0.0;   // conditioner weights and biases
    std::size_t checked = 0;
    std::size_t total = 0;
};

// Central finite differences of mean_nll against nll_and_gradients. Every
// parameter is checked for models with at most 500 parameters, otherwise a
// seeded sample of 200. Per-coordinate error is |fd - an| / max(|fd|, |an|,
// 1e-3): relative for gradients above 1e-3, absolute below.
AuditReport finite_difference_audit(const FlowModel& model, const Matrix& batch, double step = 1e-5,
                                    std::uint64_t seed = 0);

}  // namespace bernflow
