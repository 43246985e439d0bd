#include "bernflow/experiments.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <random>

namespace bernflow {

namespace {

RatioSummary summarize(std::vector<double> v) {
    if (v.empty()) return {};
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    const double median = v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
    return {v.front(), median, v.back()};
}

double mean_log_likelihood(const FlowModel& model, const Matrix& points) {
    const auto lp = log_density(model, points);
    double sum = 0.0;
    for (double v : lp) sum += v;
    return sum / static_cast<double>(lp.size());
}

Matrix stack(const Matrix& a, const Matrix& b) {
    Matrix out = a;
    for (std::size_t i = 0; i < b.rows(); ++i) out.append_row(b.row(i));
    return out;
}

}  // namespace

double bound_target(double x) { return 1.0 - std::pow(1.0 - x * x, 5); }

double bound_target_d2(double x) {
    const double s = 1.0 - x * x;
    return 10.0 * s * s * s * (1.0 - 9.0 * x * x);
}

double bound_target_d3(double x) {
    const double s = 1.0 - x * x;
    return -240.0 * x * s * s * (1.0 - 3.0 * x * x);
}

BoundConstants bound_constants(std::size_t grid) {
    if (grid < 2) throw InvalidArgument("bound_constants: grid needs at least 2 points");
    BoundConstants c{0.0, 0.0};
    for (std::size_t i = 0; i < grid; ++i) {
        const double x = static_cast<double>(i) / static_cast<double>(grid - 1);
        const double rho2 = x * (1.0 - x);
        c.a = std::max(c.a, rho2 * std::abs(bound_target_d2(x)));
        c.b = std::max(c.b, rho2 * std::sqrt(rho2) * std::abs(bound_target_d3(x)));
    }
    return c;
}

double error_bound(int n, const BoundConstants& c) { return c.a / n + c.b / std::pow(n, 1.5); }
double bracket_lo(int n) { return 1.25 / n + 5.0 / std::pow(n, 1.5); }
double bracket_hi(int n) { return 1.25 / n + 5.5 / std::pow(n, 1.5); }

double average_map_error(const std::function<double(double)>& map, std::size_t nodes) {
    if (nodes < 2) throw InvalidArgument("average_map_error: need at least 2 nodes");
    const double h = 1.0 / static_cast<double>(nodes - 1);
    double sum = 0.0;
    for (std::size_t i = 0; i < nodes; ++i) {
        const double x = static_cast<double>(i) * h;
        const double e = std::abs(bound_target(x) - map(x));
        sum += (i == 0 || i + 1 == nodes) ? 0.5 * e : e;
    }
    return sum * h;
}

std::vector<ErrorBoundRow> run_error_bound(const ErrorBoundConfig& cfg) {
    if (cfg.degrees.empty()) throw InvalidArgument("error-bound: degree list is empty");
    for (int n : cfg.degrees) {
        if (n < 5 || n > kMaxDegree) throw InvalidArgument("error-bound: degrees must lie in [5, 200]");
    }
    if (cfg.samples < 2) throw InvalidArgument("error-bound: need at least 2 samples");
    const BoundConstants constants = bound_constants();

    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Matrix data(cfg.samples, 1);
    for (double& v : data.data()) v = std::clamp(unif(rng), kSupportMargin, 1.0 - kSupportMargin);

    std::vector<ErrorBoundRow> rows;
    for (int n : cfg.degrees) {
        ErrorBoundRow row;
        row.n = n;
        row.e_n = error_bound(n, constants);
        row.bound_lo = bracket_lo(n);
        row.bound_hi = bracket_hi(n);
        row.in_bracket = row.bound_lo < row.e_n && row.e_n < row.bound_hi;

        std::vector<double> samples(n + 1);
        for (int k = 0; k <= n; ++k) samples[k] = bound_target(static_cast<double>(k) / n);
        const BernsteinPoly op = bernstein_operator(samples);
        row.operator_error = average_map_error([&](double x) { return eval(op, x); });
        row.operator_pass = row.operator_error <= row.bound_hi;

        FlowSpec spec;
        spec.degree = n;
        spec.prior = PriorSpec::kumaraswamy(2.0, 5.0, 1);
        spec.identity_init = true;
        try {
            auto result = train(make_flow(spec, cfg.seed), data, cfg.train);
            const auto& layer = result.model.layers.front();
            const BernsteinPoly map(coupling_coefficients(layer, 0, {}), Interval{});
            const auto fn = [&](double x) { return eval(map, x); };
            row.avg_error = average_map_error(fn, 10000);
            row.avg_error_refined = average_map_error(fn, 100000);
            row.refinement_ok = std::abs(row.avg_error - row.avg_error_refined) < 1e-5;
            row.final_nll = mean_nll(result.model, data);
            row.pass = row.avg_error <= row.bound_hi;
        } catch (const std::exception& e) {
            row.error = e.what();
            row.avg_error = row.avg_error_refined = std::numeric_limits<double>::quiet_NaN();
            row.final_nll = std::numeric_limits<double>::quiet_NaN();
        }
        rows.push_back(row);
    }
    return rows;
}

FitResult fit_dataset(const Dataset& ds, FlowSpec spec, const TrainConfig& cfg, std::uint64_t model_seed) {
    spec.dimension = ds.dimension();
    spec.prior.dimension = ds.dimension();
    spec.target_box.clear();
    spec.diffeo = ds.rescale_diffeo;
    const Matrix data = ds.original_points();
    FitResult out{make_flow(spec, model_seed), {}, 0.0, 0.0, {}};
    out.initial_nll = mean_nll(out.model, data);
    try {
        auto r = train(out.model, data, cfg);
        out.model = std::move(r.model);
        out.history = std::move(r.history);
        out.final_nll = mean_nll(out.model, data);
    } catch (const TrainingAborted& e) {
        out.history = e.history();
        out.error = e.what();
        out.final_nll = std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

std::vector<double> density_modes(const FlowModel& model, double lo, double hi, std::size_t points) {
    if (model.dimension() != 1) throw InvalidArgument("density_modes: model must be one-dimensional");
    if (!(hi > lo) || points < 3) throw InvalidArgument("density_modes: need lo < hi and at least 3 points");
    std::vector<double> xs(points);
    Matrix grid(points, 1);
    for (std::size_t i = 0; i < points; ++i) {
        xs[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
        grid(i, 0) = xs[i];
    }
    const auto lp = log_density(model, grid);
    std::vector<double> modes;
    for (std::size_t i = 1; i + 1 < points; ++i) {
        if (std::isfinite(lp[i]) && lp[i] > lp[i - 1] && lp[i] >= lp[i + 1]) modes.push_back(xs[i]);
    }
    return modes;
}

PerturbationCheck perturbation_check(const BernsteinPoly& poly, double epsilon, int perturbations, int grid,
                                     std::uint64_t seed) {
    if (!(epsilon >= 0.0) || perturbations < 1 || grid < 2) {
        throw InvalidArgument("perturbation_check: need epsilon >= 0, perturbations >= 1 and grid >= 2");
    }
    const PowerPoly power = to_power_basis(poly);
    const Interval dom = poly.domain();
    std::vector<double> xs(grid), base_b(grid), base_p(grid), bound_b(grid), bound_p(grid), cond_b(grid),
        cond_p(grid);
    PerturbationCheck out;
    for (int g = 0; g < grid; ++g) {
        xs[g] = dom.from_unit(static_cast<double>(g) / (grid - 1));
        base_b[g] = eval(poly, xs[g]);
        base_p[g] = eval(power, xs[g]);
        bound_b[g] = perturbation_bound(Basis::Bernstein, poly.coeffs(), dom, xs[g], epsilon);
        bound_p[g] = perturbation_bound(Basis::Power, power.coeffs(), dom, xs[g], epsilon);
        cond_b[g] = value_condition_number(poly, xs[g]);
        cond_p[g] = value_condition_number(power, xs[g]);
        if (cond_b[g] > cond_p[g] + 1e-12) ++out.ordering_violations;
    }
    // Slack covers the rounding of the two evaluations being differenced.
    constexpr double kRounding = 64.0 * DBL_EPSILON;
    for (int s = 0; s < perturbations; ++s) {
        const auto pb = perturb_coefficients(poly, epsilon, seed + static_cast<std::uint64_t>(s));
        const auto pp = perturb_coefficients(power, epsilon, seed + static_cast<std::uint64_t>(s));
        for (int g = 0; g < grid; ++g) {
            const double db = std::abs(eval(pb, xs[g]) - base_b[g]);
            const double dp = std::abs(eval(pp, xs[g]) - base_p[g]);
            const double lim_b = epsilon * bound_b[g];
            const double lim_p = epsilon * bound_p[g];
            if (db > lim_b + kRounding * cond_b[g]) ++out.bernstein_violations;
            if (dp > lim_p + kRounding * cond_p[g]) ++out.power_violations;
            if (lim_b > 0.0) out.max_ratio_bernstein = std::max(out.max_ratio_bernstein, db / lim_b);
            if (lim_p > 0.0) out.max_ratio_power = std::max(out.max_ratio_power, dp / lim_p);
            ++out.points;
        }
    }
    return out;
}

RobustnessReport run_robustness(const RobustnessConfig& cfg) {
    if (cfg.seeds.size() < 2) throw InvalidArgument("robustness: need at least 2 clean seeds");
    if (cfg.train_csv.has_value() != cfg.test_csv.has_value()) {
        throw InvalidArgument("robustness: --train-csv and --test-csv must be given together");
    }
    Matrix train_raw, test_raw;
    std::string provenance;
    if (cfg.train_csv) {
        train_raw = load_csv(*cfg.train_csv, false);
        test_raw = load_csv(*cfg.test_csv, false);
        if (train_raw.cols() != test_raw.cols()) throw InvalidArgument("robustness: train/test column mismatch");
        provenance = "csv " + *cfg.train_csv;
    } else {
        train_raw = sample_mixture(cfg.mixture, cfg.train_count, cfg.data_seed);
        test_raw = sample_mixture(cfg.mixture, cfg.test_count, cfg.data_seed + 1);
        provenance = "gaussian mixture";
    }
    // One box for train and test so every test point is inside the support.
    const TargetDiffeo rescale = fit_rescale(stack(train_raw, test_raw));
    const Dataset train_ds = apply_rescale(train_raw, rescale, provenance + " (train)");

    RobustnessReport report;
    std::optional<FlowModel> first_model;
    for (std::uint64_t seed : cfg.seeds) {
        TrainConfig tc = cfg.train;
        tc.seed = seed;
        auto fit = fit_dataset(train_ds, cfg.model, tc, seed);
        if (!fit.error.empty()) report.errors.push_back("seed " + std::to_string(seed) + ": " + fit.error);
        report.clean_ll.push_back(mean_log_likelihood(fit.model, test_raw));
        if (!first_model) first_model = fit.model;
    }
    const double k = static_cast<double>(report.clean_ll.size());
    for (double v : report.clean_ll) report.mu += v / k;
    double ss = 0.0;
    for (double v : report.clean_ll) ss += (v - report.mu) * (v - report.mu);
    report.sigma = std::sqrt(ss / (k - 1.0));

    const Dataset noisy = add_uniform_noise(train_ds, cfg.noise, cfg.seeds.front());
    TrainConfig tc = cfg.train;
    tc.seed = cfg.seeds.front();
    auto fit = fit_dataset(noisy, cfg.model, tc, cfg.seeds.front());
    if (!fit.error.empty()) report.errors.push_back("noisy run: " + fit.error);
    report.noisy_ll = mean_log_likelihood(fit.model, test_raw);
    if (report.sigma > 0.0 && std::isfinite(report.sigma)) {
        report.metric = std::abs(report.noisy_ll - report.mu) / report.sigma;
    } else {
        report.degenerate = true;
    }

    const auto& layer = first_model->layers.back();
    const BernsteinPoly poly(coupling_coefficients(layer, 0, {}), Interval{});
    report.perturbation = perturbation_check(poly, cfg.perturb_epsilon, cfg.perturbations, 100, cfg.data_seed);
    return report;
}

std::vector<DegreeSweepRow> run_degree_sweep(const DegreeSweepConfig& cfg) {
    if (cfg.degrees.empty()) throw InvalidArgument("degree-sweep: degree list is empty");
    const Dataset ds = gaussian_mixture_1d(cfg.mixture, cfg.count, cfg.data_seed);
    std::vector<DegreeSweepRow> rows;
    for (int n : cfg.degrees) {
        DegreeSweepRow row;
        row.degree = n;
        FlowSpec spec = cfg.model;
        spec.degree = n;
        TrainConfig tc = cfg.train;
        tc.seed = cfg.seed;
        try {
            const auto fit = fit_dataset(ds, spec, tc, cfg.seed);
            row.initial_nll = fit.initial_nll;
            row.final_nll = fit.final_nll;
            row.nonfinite_events = fit.history.nonfinite_count();
            row.error = fit.error;
        } catch (const std::exception& e) {
            row.error = e.what();
            row.final_nll = std::numeric_limits<double>::quiet_NaN();
        }
        row.nonfinite = row.nonfinite_events > 0 || !row.error.empty() || !std::isfinite(row.final_nll);
        rows.push_back(row);
    }
    return rows;
}

ConditionReport run_condition_bench(const ConditionBenchConfig& cfg) {
    if (cfg.polynomials < 1 || cfg.max_degree < 1 || cfg.max_degree > kMaxDegree || cfg.grid < 2) {
        throw InvalidArgument("condition-bench: invalid configuration");
    }
    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<int> degree(1, cfg.max_degree);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    ConditionReport report;
    std::vector<double> value_ratios, root_ratios;
    constexpr int kRootScan = 1000;

    for (int p = 0; p < cfg.polynomials; ++p) {
        const int n = degree(rng);
        double a = unif(rng);
        double b = unif(rng);
        if (a > b) std::swap(a, b);
        if (b - a < 1e-3) b = std::min(1.0, a + 1e-3), a = b - 1e-3;
        std::vector<double> coeffs(n + 1);
        for (double& c : coeffs) c = normal(rng);
        const BernsteinPoly bp(coeffs, Interval(a, b));
        const PowerPoly pp = to_power_basis(bp);

        for (int g = 0; g < cfg.grid; ++g) {
            const double x = a + (b - a) * static_cast<double>(g) / (cfg.grid - 1);
            const double cb = value_condition_number(bp, x);
            const double cp = value_condition_number(pp, x);
            ++report.value_points;
            if (cb > cp + 1e-12) ++report.value_violations;
            if (cb > 0.0) value_ratios.push_back(cp / cb);
        }

        // Simple roots: sign changes on a scan grid, refined by bisection.
        double prev_x = a;
        double prev_v = eval(bp, a);
        for (int s = 1; s <= kRootScan; ++s) {
            const double x = a + (b - a) * static_cast<double>(s) / kRootScan;
            const double v = eval(bp, x);
            if (prev_v * v < 0.0) {
                double lo = prev_x, hi = x, flo = prev_v;
                for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    const double fm = eval(bp, mid);
                    if ((fm < 0.0) == (flo < 0.0)) lo = mid, flo = fm; else hi = mid;
                }
                const double root = 0.5 * (lo + hi);
                if (root > 0.0 && root <= 1.0) {
                    try {
                        const double rb = root_condition_number(Basis::Bernstein, bp.coeffs(), bp.domain(), root, 1);
                        const double rp = root_condition_number(Basis::Power, pp.coeffs(), pp.domain(), root, 1);
                        ++report.roots;
                        if (rb > rp + 1e-12) ++report.root_violations;
                        root_ratios.push_back(rp / rb);
                    } catch (const MultiplicityError&) {
                        // Not a simple root at double precision.
                    }
                }
            }
            prev_x = x;
            prev_v = v;
        }
    }
    report.value_dominance_rate =
        1.0 - static_cast<double>(report.value_violations) / static_cast<double>(report.value_points);
    report.root_dominance_rate =
        report.roots ? 1.0 - static_cast<double>(report.root_violations) / static_cast<double>(report.roots) : 1.0;
    report.value_ratio = summarize(std::move(value_ratios));
    report.root_ratio = summarize(std::move(root_ratios));
    return report;
}

}  // namespace bernflow
