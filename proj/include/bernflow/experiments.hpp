#pragma once

// Reproducible experiment drivers shared by the CLI and the acceptance
// suite: the map-error bound, noise robustness, degree sweep and condition
// number benchmark.

#include "bernflow/datasets.hpp"
#include "bernflow/trainer.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace bernflow {

// ---- map-error bound -------------------------------------------------------

// Increasing map that pushes Kumaraswamy(2,5) onto Uniform[0,1]:
// f(x) = 1 - (1 - x^2)^5, with closed-form derivatives.
double bound_target(double x);
double bound_target_d2(double x);
double bound_target_d3(double x);

struct BoundConstants {
    double a;  // max over [0,1] of x(1-x) |f''(x)|
    double b;  // max over [0,1] of (x(1-x))^{3/2} |f'''(x)|
};
BoundConstants bound_constants(std::size_t grid = 100000);

// E_n = a / n + b / n^{3/2}.
double error_bound(int n, const BoundConstants& c);
double bracket_lo(int n);  // 1.25 / n + 5 / n^{3/2}
double bracket_hi(int n);  // 1.25 / n + 5.5 / n^{3/2}

// Composite trapezoid of |f(x) - map(x)| over [0,1] with `nodes` nodes.
double average_map_error(const std::function<double(double)>& map, std::size_t nodes = 10000);

struct ErrorBoundConfig {
    std::vector<int> degrees{10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
    std::size_t samples = 20000;  // Uniform[0,1] training targets
    TrainConfig train;
    std::uint64_t seed = 0;
};

struct ErrorBoundRow {
    int n = 0;
    double avg_error = 0.0;          // trained map, 10^4 nodes
    double avg_error_refined = 0.0;  // trained map, 10^5 nodes
    double operator_error = 0.0;     // Bernstein operator of f, 10^4 nodes
    double e_n = 0.0;
    double bound_lo = 0.0;
    double bound_hi = 0.0;
    double final_nll = 0.0;
    bool pass = false;               // avg_error <= bound_hi
    bool operator_pass = false;      // operator_error <= bound_hi
    bool in_bracket = false;         // bound_lo < e_n < bound_hi
    bool refinement_ok = false;      // |avg_error - avg_error_refined| < 1e-5
    std::string error;               // training failure, empty on success
};

std::vector<ErrorBoundRow> run_error_bound(const ErrorBoundConfig& cfg);

// ---- shared 1-D training helpers -------------------------------------------

struct FitResult {
    FlowModel model;
    TrainHistory history;
    double initial_nll = 0.0;  // full training set, original units
    double final_nll = 0.0;
    std::string error;         // non-empty when training aborted
};

// Trains a model whose diffeo is the dataset's rescale, so NLLs are in
// original units. `spec.dimension` and `spec.diffeo` are overridden.
FitResult fit_dataset(const Dataset& ds, FlowSpec spec, const TrainConfig& cfg, std::uint64_t model_seed);

// Interior local maxima of the model density on an evenly spaced grid.
std::vector<double> density_modes(const FlowModel& model, double lo, double hi, std::size_t points = 10000);

// ---- robustness --------------------------------------------------------------

struct PerturbationCheck {
    std::size_t points = 0;
    std::size_t bernstein_violations = 0;  // |dp| > eps * bound, Bernstein form
    std::size_t power_violations = 0;
    std::size_t ordering_violations = 0;   // C_Bernstein > C_power + 1e-12
    double max_ratio_bernstein = 0.0;      // max |dp| / (eps * bound)
    double max_ratio_power = 0.0;

    bool ok() const noexcept { return bernstein_violations == 0 && power_violations == 0 && ordering_violations == 0; }
};

// Seeded eps-relative coefficient perturbations of `poly` and of its power
// form, checked on `grid` evenly spaced points of the domain.
PerturbationCheck perturbation_check(const BernsteinPoly& poly, double epsilon, int perturbations, int grid,
                                     std::uint64_t seed);

struct RobustnessConfig {
    MixtureSpec1D mixture = MixtureSpec1D::five_gaussians();
    std::size_t train_count = 5000;
    std::size_t test_count = 5000;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    std::uint64_t data_seed = 0;
    double noise = 1e-2;
    FlowSpec model;
    TrainConfig train;
    std::optional<std::string> train_csv;  // replaces the synthetic train set
    std::optional<std::string> test_csv;
    double perturb_epsilon = 1e-2;
    int perturbations = 100;
};

struct RobustnessReport {
    std::vector<double> clean_ll;  // mean test log-likelihood per clean seed
    double mu = 0.0;
    double sigma = 0.0;            // sample standard deviation
    double noisy_ll = 0.0;
    std::optional<double> metric;  // |y - mu| / sigma; empty when sigma == 0
    bool degenerate = false;
    PerturbationCheck perturbation;
    std::vector<std::string> errors;
};

RobustnessReport run_robustness(const RobustnessConfig& cfg);

// ---- degree sweep -----------------------------------------------------------

struct DegreeSweepConfig {
    std::vector<int> degrees{5, 10, 20, 50, 100};
    MixtureSpec1D mixture = MixtureSpec1D::five_gaussians();
    std::size_t count = 20000;
    std::uint64_t data_seed = 0;
    std::uint64_t seed = 0;
    FlowSpec model;
    TrainConfig train;
};

struct DegreeSweepRow {
    int degree = 0;
    double initial_nll = 0.0;
    double final_nll = 0.0;
    std::size_t nonfinite_events = 0;
    bool nonfinite = false;
    std::string error;
};

std::vector<DegreeSweepRow> run_degree_sweep(const DegreeSweepConfig& cfg);

// ---- condition numbers ------------------------------------------------------

struct ConditionBenchConfig {
    int polynomials = 1000;
    int max_degree = 10;
    int grid = 100;
    std::uint64_t seed = 0;
};

struct RatioSummary {
    double min = 0.0;
    double median = 0.0;
    double max = 0.0;
};

struct ConditionReport {
    std::size_t value_points = 0;
    std::size_t value_violations = 0;  // C_Bernstein > C_power + 1e-12
    double value_dominance_rate = 1.0;
    RatioSummary value_ratio;          // C_power / C_Bernstein
    std::size_t roots = 0;             // simple roots in (0, 1] ∩ domain
    std::size_t root_violations = 0;
    double root_dominance_rate = 1.0;
    RatioSummary root_ratio;
};

ConditionReport run_condition_bench(const ConditionBenchConfig& cfg);

}  // namespace bernflow
