// bernflow: train, evaluate and sample Bernstein flows, and run the
// reproducible experiments.
//
// Every option can also come from a JSON object passed with --config; keys
// are option names without the leading dashes. Command-line values win.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 numeric failure.

#include "bernflow/experiments.hpp"
#include "bernflow/version.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>

using nlohmann::json;
using namespace bernflow;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitNumeric = 2;

// Binds options to variables and lets a JSON config fill the ones the
// command line left unset.
class Options {
public:
    explicit Options(CLI::App* app) : app_(app) {
        app_->add_option("--config", config_path_, "JSON file with option values");
    }

    template <class T>
    CLI::Option* add(const std::string& name, T& var, const std::string& help) {
        CLI::Option* opt = app_->add_option("--" + name, var, help)->capture_default_str();
        bind(name, var, opt);
        return opt;
    }

    CLI::Option* flag(const std::string& name, bool& var, const std::string& help) {
        CLI::Option* opt = app_->add_flag("--" + name, var, help);
        bind(name, var, opt);
        return opt;
    }

    void require(const std::string& name) { required_.push_back(name); }

    // Applies --config, then checks required options.
    void finalize() {
        if (!config_path_.empty()) {
            std::ifstream in(config_path_);
            if (!in) throw InvalidArgument("cannot open config '" + config_path_ + "'");
            json cfg;
            try {
                cfg = json::parse(in);
            } catch (const json::exception& e) {
                throw InvalidArgument("config '" + config_path_ + "': " + e.what());
            }
            if (!cfg.is_object()) throw InvalidArgument("config must be a JSON object");
            for (const auto& [key, value] : cfg.items()) {
                if (key == "experiment") {
                    if (value != app_->get_name()) {
                        throw InvalidArgument("config is for '" + value.dump() + "', not '" + app_->get_name() + "'");
                    }
                    continue;
                }
                const auto it = bindings_.find(key);
                if (it == bindings_.end()) throw InvalidArgument("unknown config key '" + key + "'");
                try {
                    it->second.set(value);
                } catch (const json::exception& e) {
                    throw InvalidArgument("config key '" + key + "': " + e.what());
                }
            }
        }
        for (const auto& name : required_) {
            if (!bindings_.at(name).provided()) throw InvalidArgument("--" + name + " is required");
        }
    }

    json echo() const {
        json out = json::object();
        for (const auto& [name, b] : bindings_) out[name] = b.get();
        return out;
    }

    bool provided(const std::string& name) const { return bindings_.at(name).provided(); }

private:
    struct Binding {
        std::function<void(const json&)> set;
        std::function<json()> get;
        std::function<bool()> provided;
    };

    template <class T>
    void bind(const std::string& name, T& var, CLI::Option* opt) {
        auto from_config = std::make_shared<bool>(false);
        bindings_[name] = Binding{
            [&var, opt, from_config](const json& j) {
                if (opt->count() == 0) {
                    var = j.get<T>();
                    *from_config = true;
                }
            },
            [&var] { return json(var); },
            [opt, from_config] { return opt->count() > 0 || *from_config; }};
    }

    CLI::App* app_;
    std::string config_path_;
    std::map<std::string, Binding> bindings_;
    std::vector<std::string> required_;
};

struct ModelOptions {
    int degree = 10;
    int layers = 1;
    int hidden1 = 32;
    int hidden2 = 32;
    std::string prior = "kumaraswamy";
    double prior_a = 2.0;
    double prior_b = 5.0;
    std::string scheme = "cumulative-positive";
    bool reverse = false;
    double init_scale = 1.0;
    bool identity_init = false;

    void add(Options& o) {
        o.add("degree", degree, "polynomial degree of every coupling");
        o.add("layers", layers, "number of flow layers");
        o.add("hidden1", hidden1, "first hidden width of the conditioners");
        o.add("hidden2", hidden2, "second hidden width of the conditioners");
        o.add("prior", prior, "kumaraswamy, uniform or squashed-normal");
        o.add("prior-a", prior_a, "Kumaraswamy shape a");
        o.add("prior-b", prior_b, "Kumaraswamy shape b");
        o.add("scheme", scheme, "cumulative-positive or reciprocal-square");
        o.flag("reverse", reverse, "reverse the dimension order on every other layer");
        o.add("init-scale", init_scale, "standard deviation of the initial parameters");
        o.flag("identity-init", identity_init, "start from equally spaced coefficients");
    }

    FlowSpec spec(int dimension) const {
        FlowSpec s;
        s.dimension = dimension;
        s.degree = degree;
        s.layers = layers;
        s.hidden1 = hidden1;
        s.hidden2 = hidden2;
        switch (prior_kind_from_string(prior)) {
        case PriorKind::Kumaraswamy: s.prior = PriorSpec::kumaraswamy(prior_a, prior_b, dimension); break;
        case PriorKind::UniformUnit: s.prior = PriorSpec::uniform(dimension); break;
        case PriorKind::SquashedNormal: s.prior = PriorSpec::squashed_normal(dimension); break;
        }
        s.scheme = scheme_from_string(scheme);
        s.alternate_reverse = reverse;
        s.init_scale = init_scale;
        s.identity_init = identity_init;
        return s;
    }
};

struct TrainOptions {
    int iters = 2000;
    std::size_t batch = 512;
    double lr = 0.01;
    double decay = 0.9;
    int decay_every = 50;
    double grad_clip = 0.0;
    int threads = 0;

    void add(Options& o) {
        o.add("iters", iters, "training iterations");
        o.add("batch", batch, "mini-batch size");
        o.add("lr", lr, "initial learning rate");
        o.add("decay", decay, "learning-rate decay factor");
        o.add("decay-every", decay_every, "iterations between decays");
        o.add("grad-clip", grad_clip, "global gradient-norm clip; 0 disables");
        o.add("threads", threads, "worker threads for gradients; 0 uses all cores");
    }

    TrainConfig config(std::uint64_t seed) const {
        TrainConfig c;
        c.max_iters = iters;
        c.batch_size = batch;
        c.lr0 = lr;
        c.decay_factor = decay;
        c.decay_every = decay_every;
        if (grad_clip > 0.0) c.grad_clip = grad_clip;
        c.threads = threads;
        c.seed = seed;
        return c;
    }
};

char delimiter_from(const std::string& s) {
    if (s == "tab" || s == "\\t") return '\t';
    if (s.size() != 1) throw InvalidArgument("--delimiter must be a single character or 'tab'");
    return s[0];
}

void write_json(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument("cannot open '" + path + "' for writing");
    out << j.dump(2) << '\n';
    if (!out) throw InvalidArgument("write failed for '" + path + "'");
}

std::ofstream open_csv(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument("cannot open '" + path + "' for writing");
    out.precision(17);
    return out;
}

json manifest(const std::string& command, const Options& opts, double seconds) {
    return {{"command", command},
            {"version", kVersion},
            {"config", opts.echo()},
            {"timings", {{"total_seconds", seconds}}}};
}

std::string manifest_path(const std::string& requested, const std::string& out) {
    return requested.empty() ? out + ".manifest.json" : requested;
}


json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// ---- commands ----------------------------------------------------------------

struct TrainCmd {
    ModelOptions model;
    TrainOptions train;
    std::string data, dataset, delimiter = ",", checkpoint, history, manifest_file, save_data;
    bool header = false;
    std::size_t count = 20000;
    std::uint64_t data_seed = 0, seed = 0;
    double margin = kDefaultRescaleMargin;

    void add(Options& o) {
        model.add(o);
        train.add(o);
        o.add("data", data, "CSV of training points in original units");
        o.flag("header", header, "the CSV has a header row");
        o.add("delimiter", delimiter, "CSV delimiter");
        o.add("dataset", dataset, "synthetic data: mixture5, mixture7, moons, rings, checkerboard, pinwheel");
        o.add("count", count, "synthetic sample count");
        o.add("data-seed", data_seed, "synthetic data seed");
        o.add("margin", margin, "rescale margin inside the unit box");
        o.add("seed", seed, "initialization and shuffling seed");
        o.add("checkpoint", checkpoint, "output checkpoint (JSON)");
        o.add("history", history, "output training history CSV");
        o.add("manifest", manifest_file, "output manifest JSON");
        o.add("save-data", save_data, "write the training points (original units) to this CSV");
        o.require("checkpoint");
    }

    int run(const Options& o) {
        const auto t0 = Clock::now();
        if (data.empty() == dataset.empty()) throw InvalidArgument("give exactly one of --data and --dataset");
        Dataset ds;
        if (!data.empty()) {
            ds = rescale_to_box(load_csv(data, header, delimiter_from(delimiter)), margin, "csv " + data);
        } else if (dataset == "mixture5") {
            ds = gaussian_mixture_1d(MixtureSpec1D::five_gaussians(), count, data_seed, margin);
        } else if (dataset == "mixture7") {
            ds = gaussian_mixture_1d(MixtureSpec1D::seven_gaussians(), count, data_seed, margin);
        } else {
            ds = toy2d(dataset, count, data_seed, margin);
        }
        const auto fit = fit_dataset(ds, model.spec(ds.dimension()), train.config(seed), seed);
        save_checkpoint(fit.model, checkpoint);
        const std::string hist = history.empty() ? checkpoint + ".history.csv" : history;
        fit.history.write_csv(hist);
        if (!save_data.empty()) write_csv(ds.original_points(), save_data);
        json m = manifest("train", o, seconds_since(t0));
        m["provenance"] = ds.provenance;
        m["initial_nll"] = number(fit.initial_nll);
        m["final_nll"] = number(fit.final_nll);
        m["nonfinite_iterations"] = fit.history.nonfinite_count();
        m["parameters"] = parameter_count(fit.model);
        if (!fit.error.empty()) m["error"] = fit.error;
        write_json(m, manifest_path(manifest_file, checkpoint));
        std::cout << "final_nll " << fit.final_nll << " (initial " << fit.initial_nll << ")\n";
        if (!fit.error.empty()) {
            std::cerr << "error: " << fit.error << '\n';
            return kExitNumeric;
        }
        return 0;
    }
};

struct DensityCmd {
    std::string checkpoint, points, out, delimiter = ",";
    bool header = false;

    void add(Options& o) {
        o.add("checkpoint", checkpoint, "model checkpoint");
        o.add("points", points, "CSV of query points");
        o.flag("header", header, "the CSV has a header row");
        o.add("delimiter", delimiter, "CSV delimiter");
        o.add("out", out, "output CSV of log-densities");
        o.require("checkpoint");
        o.require("points");
        o.require("out");
    }

    int run(const Options&) {
        const FlowModel model = load_checkpoint(checkpoint);
        const Matrix x = load_csv(points, header, delimiter_from(delimiter));
        if (x.cols() != static_cast<std::size_t>(model.dimension())) {
            throw InvalidArgument("points have " + std::to_string(x.cols()) + " columns but the model has dimension " +
                                  std::to_string(model.dimension()));
        }
        const auto lp = log_density(model, x);
        auto f = open_csv(out);
        f << "log_density\n";
        double sum = 0.0;
        for (double v : lp) {
            f << v << '\n';
            sum += v;
        }
        std::cout << "mean_log_density " << sum / static_cast<double>(lp.size()) << '\n';
        return 0;
    }
};

struct SampleCmd {
    std::string checkpoint, out;
    std::size_t count = 1000;
    std::uint64_t seed = 0;

    void add(Options& o) {
        o.add("checkpoint", checkpoint, "model checkpoint");
        o.add("count", count, "number of samples");
        o.add("seed", seed, "sampling seed");
        o.add("out", out, "output CSV");
        o.require("checkpoint");
        o.require("seed");
        o.require("out");
    }

    int run(const Options&) {
        const FlowModel model = load_checkpoint(checkpoint);
        write_csv(sample(model, count, seed), out);
        return 0;
    }
};

struct InvertCheckCmd {
    std::string checkpoint, points, out, delimiter = ",";
    bool header = false;
    std::size_t count = 1000;
    std::uint64_t seed = 0;
    double tolerance = 1e-8;

    void add(Options& o) {
        o.add("checkpoint", checkpoint, "model checkpoint");
        o.add("points", points, "CSV of data points; model samples when omitted");
        o.flag("header", header, "the CSV has a header row");
        o.add("delimiter", delimiter, "CSV delimiter");
        o.add("count", count, "samples drawn when --points is omitted");
        o.add("seed", seed, "sampling seed");
        o.add("tolerance", tolerance, "maximum accepted round-trip error");
        o.add("out", out, "optional JSON report");
        o.require("checkpoint");
    }

    int run(const Options& o) {
        const FlowModel model = load_checkpoint(checkpoint);
        const Matrix x = points.empty() ? sample(model, count, seed) : load_csv(points, header, delimiter_from(delimiter));
        if (x.cols() != static_cast<std::size_t>(model.dimension())) {
            throw InvalidArgument("points do not match the model dimension");
        }
        double max_err = 0.0;
        for (std::size_t i = 0; i < x.rows(); ++i) {
            const auto z = inverse(model, x.row(i));
            const auto back = forward(model, z.point);
            for (std::size_t j = 0; j < x.cols(); ++j) max_err = std::max(max_err, std::abs(back.point[j] - x(i, j)));
        }
        const bool pass = max_err <= tolerance;
        std::cout << "max_roundtrip_error " << max_err << (pass ? " PASS" : " FAIL") << '\n';
        if (!out.empty()) {
            json r = manifest("invert-check", o, 0.0);
            r["points"] = x.rows();
            r["max_roundtrip_error"] = max_err;
            r["pass"] = pass;
            write_json(r, out);
        }
        return pass ? 0 : kExitNumeric;
    }
};

struct ErrorBoundCmd {
    TrainOptions train;
    std::vector<int> degrees{10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
    std::size_t samples = 20000;
    std::uint64_t seed = 0;
    std::string out = "error_bound.csv", manifest_file;

    void add(Options& o) {
        train.add(o);
        o.add("degrees", degrees, "polynomial degrees (each in [5, 200])");
        o.add("samples", samples, "Uniform[0,1] training points");
        o.add("seed", seed, "data, initialization and shuffling seed");
        o.add("out", out, "results CSV");
        o.add("manifest", manifest_file, "manifest JSON");
        o.require("seed");
    }

    int run(const Options& o) {
        const auto t0 = Clock::now();
        ErrorBoundConfig cfg;
        cfg.degrees = degrees;
        cfg.samples = samples;
        cfg.seed = seed;
        cfg.train = train.config(seed);
        const auto rows = run_error_bound(cfg);
        auto f = open_csv(out);
        f << "n,avg_error,bound_lo,bound_hi,pass,e_n,in_bracket,avg_error_refined,refinement_ok,operator_error,"
             "operator_pass,final_nll,error\n";
        bool failed = false;
        json summary = json::array();
        for (const auto& r : rows) {
            f << r.n << ',' << r.avg_error << ',' << r.bound_lo << ',' << r.bound_hi << ',' << r.pass << ',' << r.e_n
              << ',' << r.in_bracket << ',' << r.avg_error_refined << ',' << r.refinement_ok << ','
              << r.operator_error << ',' << r.operator_pass << ',' << r.final_nll << ",\"" << r.error << "\"\n";
            failed = failed || !r.error.empty();
            summary.push_back({{"n", r.n}, {"avg_error", number(r.avg_error)}, {"bound_hi", r.bound_hi},
                               {"pass", r.pass}, {"e_n", r.e_n}, {"in_bracket", r.in_bracket}});
        }
        json m = manifest("error-bound", o, seconds_since(t0));
        const auto c = bound_constants();
        m["bound_constants"] = {{"a", c.a}, {"b", c.b}};
        m["rows"] = summary;
        write_json(m, manifest_path(manifest_file, out));
        return failed ? kExitNumeric : 0;
    }
};

struct RobustnessCmd {
    ModelOptions model;
    TrainOptions train;
    std::vector<std::uint64_t> seeds;
    std::uint64_t seed = 0, data_seed = 0;
    std::size_t train_count = 5000, test_count = 5000;
    double noise = 1e-2, epsilon = 1e-2;
    int perturbations = 100;
    std::string train_csv, test_csv, out = "robustness.csv", manifest_file;

    void add(Options& o) {
        model.add(o);
        train.add(o);
        o.add("seed", seed, "base seed; clean seeds default to seed .. seed+4");
        o.add("seeds", seeds, "explicit clean-run seeds");
        o.add("data-seed", data_seed, "synthetic data seed");
        o.add("train-count", train_count, "synthetic training points");
        o.add("test-count", test_count, "synthetic test points");
        o.add("noise", noise, "upper end of the Uniform[0, noise] training noise");
        o.add("epsilon", epsilon, "relative coefficient perturbation");
        o.add("perturbations", perturbations, "perturbations of the trained polynomial");
        o.add("train-csv", train_csv, "real training data (original units); requires --test-csv");
        o.add("test-csv", test_csv, "real test data (original units)");
        o.add("out", out, "per-run CSV");
        o.add("manifest", manifest_file, "manifest JSON");
        o.require("seed");
    }

    int run(const Options& o) {
        const auto t0 = Clock::now();
        RobustnessConfig cfg;
        cfg.seeds = seeds;
        if (cfg.seeds.empty()) {
            for (std::uint64_t s = 0; s < 5; ++s) cfg.seeds.push_back(seed + s);
        }
        cfg.data_seed = data_seed;
        cfg.train_count = train_count;
        cfg.test_count = test_count;
        cfg.noise = noise;
        cfg.perturb_epsilon = epsilon;
        cfg.perturbations = perturbations;
        if (!train_csv.empty()) cfg.train_csv = train_csv;
        if (!test_csv.empty()) cfg.test_csv = test_csv;
        cfg.model = model.spec(1);
        cfg.train = train.config(seed);
        const auto r = run_robustness(cfg);

        auto f = open_csv(out);
        f << "run,seed,test_log_likelihood\n";
        for (std::size_t i = 0; i < r.clean_ll.size(); ++i) f << "clean," << cfg.seeds[i] << ',' << r.clean_ll[i] << '\n';
        f << "noisy," << cfg.seeds.front() << ',' << r.noisy_ll << '\n';

        json m = manifest("robustness", o, seconds_since(t0));
        m["clean_log_likelihoods"] = r.clean_ll;
        m["mu"] = number(r.mu);
        m["sigma"] = number(r.sigma);
        m["noisy_log_likelihood"] = number(r.noisy_ll);
        m["metric"] = r.metric ? number(*r.metric) : json(nullptr);
        m["degenerate"] = r.degenerate;
        m["perturbation"] = {{"points", r.perturbation.points},
                             {"bernstein_violations", r.perturbation.bernstein_violations},
                             {"power_violations", r.perturbation.power_violations},
                             {"ordering_violations", r.perturbation.ordering_violations},
                             {"max_ratio_bernstein", r.perturbation.max_ratio_bernstein},
                             {"max_ratio_power", r.perturbation.max_ratio_power}};
        m["errors"] = r.errors;
        write_json(m, manifest_path(manifest_file, out));
        if (r.metric) {
            std::cout << "metric " << *r.metric << " (mu " << r.mu << ", sigma " << r.sigma << ", y " << r.noisy_ll
                      << ")\n";
        } else {
            std::cout << "metric undefined: sigma is zero (mu " << r.mu << ", y " << r.noisy_ll << ")\n";
        }
        return r.errors.empty() ? 0 : kExitNumeric;
    }
};

struct DegreeSweepCmd {
    ModelOptions model;
    TrainOptions train;
    std::vector<int> degrees{5, 10, 20, 50, 100};
    std::string mixture = "five", out = "degree_sweep.csv", manifest_file;
    std::size_t count = 20000;
    std::uint64_t seed = 0, data_seed = 0;

    void add(Options& o) {
        model.add(o);
        train.add(o);
        o.add("degrees", degrees, "degrees to train");
        o.add("mixture", mixture, "five or seven Gaussian components");
        o.add("count", count, "training points");
        o.add("seed", seed, "initialization and shuffling seed");
        o.add("data-seed", data_seed, "data seed");
        o.add("out", out, "results CSV");
        o.add("manifest", manifest_file, "manifest JSON");
        o.require("seed");
    }

    int run(const Options& o) {
        const auto t0 = Clock::now();
        DegreeSweepConfig cfg;
        cfg.degrees = degrees;
        if (mixture == "five") {
            cfg.mixture = MixtureSpec1D::five_gaussians();
        } else if (mixture == "seven") {
            cfg.mixture = MixtureSpec1D::seven_gaussians();
        } else {
            throw InvalidArgument("--mixture must be 'five' or 'seven'");
        }
        cfg.count = count;
        cfg.seed = seed;
        cfg.data_seed = data_seed;
        cfg.model = model.spec(1);
        cfg.train = train.config(seed);
        const auto rows = run_degree_sweep(cfg);
        auto f = open_csv(out);
        f << "degree,initial_nll,final_nll,nonfinite,nonfinite_events,error\n";
        bool failed = false;
        for (const auto& r : rows) {
            f << r.degree << ',' << r.initial_nll << ',' << r.final_nll << ',' << r.nonfinite << ','
              << r.nonfinite_events << ",\"" << r.error << "\"\n";
            failed = failed || !r.error.empty();
        }
        json m = manifest("degree-sweep", o, seconds_since(t0));
        json table = json::array();
        for (const auto& r : rows) {
            table.push_back({{"degree", r.degree}, {"final_nll", number(r.final_nll)}, {"nonfinite", r.nonfinite}});
        }
        m["rows"] = table;
        write_json(m, manifest_path(manifest_file, out));
        return failed ? kExitNumeric : 0;
    }
};

struct ConditionBenchCmd {
    int polynomials = 1000, max_degree = 10, grid = 100;
    std::uint64_t seed = 0;
    std::string out = "condition_bench.csv", manifest_file;

    void add(Options& o) {
        o.add("polynomials", polynomials, "random polynomials");
        o.add("max-degree", max_degree, "maximum degree");
        o.add("grid", grid, "evaluation points per polynomial");
        o.add("seed", seed, "sampling seed");
        o.add("out", out, "summary CSV");
        o.add("manifest", manifest_file, "manifest JSON");
        o.require("seed");
    }

    int run(const Options& o) {
        const auto t0 = Clock::now();
        const auto r = run_condition_bench({polynomials, max_degree, grid, seed});
        auto f = open_csv(out);
        f << "metric,value\n"
          << "value_points," << r.value_points << '\n'
          << "value_violations," << r.value_violations << '\n'
          << "value_dominance_rate," << r.value_dominance_rate << '\n'
          << "value_ratio_min," << r.value_ratio.min << '\n'
          << "value_ratio_median," << r.value_ratio.median << '\n'
          << "value_ratio_max," << r.value_ratio.max << '\n'
          << "roots," << r.roots << '\n'
          << "root_violations," << r.root_violations << '\n'
          << "root_dominance_rate," << r.root_dominance_rate << '\n'
          << "root_ratio_min," << r.root_ratio.min << '\n'
          << "root_ratio_median," << r.root_ratio.median << '\n'
          << "root_ratio_max," << r.root_ratio.max << '\n';
        json m = manifest("condition-bench", o, seconds_since(t0));
        m["value_dominance_rate"] = r.value_dominance_rate;
        m["root_dominance_rate"] = r.root_dominance_rate;
        m["roots"] = r.roots;
        write_json(m, manifest_path(manifest_file, out));
        std::cout << "value dominance " << r.value_dominance_rate << ", root dominance " << r.root_dominance_rate
                  << " over " << r.roots << " roots\n";
        return 0;
    }
};

template <class Cmd>
void attach(CLI::App& app, const std::string& name, const std::string& help, std::function<int()>& runner,
            std::vector<std::unique_ptr<Options>>& keep) {
    CLI::App* sub = app.add_subcommand(name, help);
    auto cmd = std::make_shared<Cmd>();
    keep.push_back(std::make_unique<Options>(sub));
    Options* opts = keep.back().get();
    cmd->add(*opts);
    sub->callback([cmd, opts, &runner] {
        runner = [cmd, opts] {
            opts->finalize();
            return cmd->run(*opts);
        };
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bernstein-polynomial normalizing flows"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    std::function<int()> runner;
    std::vector<std::unique_ptr<Options>> keep;
    attach<TrainCmd>(app, "train", "train a model and write a checkpoint", runner, keep);
    attach<DensityCmd>(app, "density", "log-densities of points under a checkpoint", runner, keep);
    attach<SampleCmd>(app, "sample", "draw samples from a checkpoint", runner, keep);
    attach<InvertCheckCmd>(app, "invert-check", "round-trip error of inverse then forward", runner, keep);
    attach<ErrorBoundCmd>(app, "error-bound", "average map error against the E_n bound", runner, keep);
    attach<RobustnessCmd>(app, "robustness", "noise-injection robustness metric", runner, keep);
    attach<DegreeSweepCmd>(app, "degree-sweep", "train across polynomial degrees", runner, keep);
    attach<ConditionBenchCmd>(app, "condition-bench", "Bernstein vs power condition numbers", runner, keep);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }
    try {
        return runner();
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const DomainError& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
}
