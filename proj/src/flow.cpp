#include "bernflow/flow.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace bernflow {

namespace {

const Interval kUnit{};

void check_in_unit_box(std::span<const double> z, const char* what) {
    for (double v : z) {
        if (!std::isfinite(v) || !kUnit.contains(v)) throw DomainError(std::string(what) + ": point outside [0,1]^d");
    }
}

bool is_unit(const Interval& iv) { return iv.lo == 0.0 && iv.hi == 1.0; }

}  // namespace

void FlowModel::validate() const {
    prior.validate();
    const int d = dimension();
    if (diffeo.dimension() != d) throw InvalidArgument("FlowModel: diffeo dimension mismatch");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& layer = layers[i];
        const int n = layer.degree;
        if (n < 1 || n > kMaxDegree) throw InvalidArgument("FlowModel: layer degree out of range");
        if (layer.dimension() != d || layer.out_range.size() != static_cast<std::size_t>(d)) {
            throw InvalidArgument("FlowModel: layer " + std::to_string(i) + " dimension mismatch");
        }
        const bool last = i + 1 == layers.size();
        for (const auto& r : layer.out_range) {
            if (!last && !is_unit(r)) throw InvalidArgument("FlowModel: intermediate layers must map onto [0,1]");
        }
        for (int k = 0; k < d; ++k) {
            const auto& c = layer.couplings[k];
            if (k == 0) {
                if (!c.is_free()) throw InvalidArgument("FlowModel: first coupling must use free parameters");
                if (c.free_raw.size() != static_cast<std::size_t>(n - 1)) {
                    throw InvalidArgument("FlowModel: free parameter count must equal degree - 1");
                }
            } else {
                if (c.is_free()) throw InvalidArgument("FlowModel: couplings after the first need a conditioner");
                if (c.net->input_size() != k || c.net->output_size() != n - 1) {
                    throw InvalidArgument("FlowModel: conditioner shape mismatch at layer " + std::to_string(i));
                }
            }
        }
    }
    // The diffeo's domain must be the model box.
    std::vector<Interval> box(d);
    if (!layers.empty()) box = layers.back().out_range;
    if (diffeo.kind() == TargetDiffeo::Kind::Affine) {
        if (diffeo.src() != box) throw InvalidArgument("FlowModel: affine diffeo source must equal the model box");
    } else {
        for (const auto& r : box) {
            if (!is_unit(r)) throw InvalidArgument("FlowModel: tanh squash requires a unit model box");
        }
    }
}

FlowModel make_flow(const FlowSpec& spec, std::uint64_t seed) {
    const int d = spec.dimension;
    if (d < 1 || spec.layers < 0) throw InvalidArgument("FlowSpec: dimension and layer count must be positive");
    if (spec.degree < 1 || spec.degree > kMaxDegree) throw InvalidArgument("FlowSpec: degree out of range");
    if (!spec.target_box.empty() && spec.target_box.size() != static_cast<std::size_t>(d)) {
        throw InvalidArgument("FlowSpec: target box dimension mismatch");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double scale = spec.identity_init ? 0.0 : spec.init_scale;

    FlowModel model;
    model.prior = spec.prior;
    model.prior.dimension = d;
    const std::vector<Interval> final_box = spec.target_box.empty() ? std::vector<Interval>(d) : spec.target_box;
    for (int i = 0; i < spec.layers; ++i) {
        FlowLayer layer;
        layer.degree = spec.degree;
        layer.scheme = spec.scheme;
        layer.reversed = spec.alternate_reverse && (i % 2 == 1);
        layer.out_range = (i + 1 == spec.layers) ? final_box : std::vector<Interval>(d);
        layer.couplings.resize(d);
        auto& first = layer.couplings[0].free_raw;
        first.resize(spec.degree - 1);
        for (double& v : first) v = scale * normal(rng);
        for (int k = 1; k < d; ++k) {
            layer.couplings[k].net =
                ConditionerNet::random(k, spec.hidden1, spec.hidden2, spec.degree - 1, rng, scale);
        }
        model.layers.push_back(std::move(layer));
    }
    if (spec.diffeo) {
        model.diffeo = *spec.diffeo;
    } else {
        model.diffeo = TargetDiffeo::affine(final_box, final_box);
    }
    model.validate();
    return model;
}

std::vector<double> coupling_coefficients(const FlowLayer& layer, int position, std::span<const double> prefix,
                                          ConditionerNet::Cache* cache) {
    const auto& c = layer.couplings[position];
    const Interval& range = layer.out_range[layer.dim_at(position)];
    if (c.is_free()) return to_coefficients(c.free_raw, range, layer.scheme, layer.degree);
    const auto raw = c.net->forward(prefix, cache);
    return to_coefficients(raw, range, layer.scheme, layer.degree);
}

LayerResult layer_forward(const FlowLayer& layer, std::span<const double> z) {
    const int d = layer.dimension();
    if (z.size() != static_cast<std::size_t>(d)) throw InvalidArgument("layer_forward: dimension mismatch");
    check_in_unit_box(z, "layer_forward");
    LayerResult r{std::vector<double>(d), 0.0};
    std::vector<double> prefix;
    prefix.reserve(d);
    for (int k = 0; k < d; ++k) {
        const int j = layer.dim_at(k);
        const BernsteinPoly poly(coupling_coefficients(layer, k, prefix), kUnit);
        const auto [value, slope] = eval_with_derivative(poly, z[j]);
        r.point[j] = value;
        r.logdet += std::log(slope);
        prefix.push_back(z[j]);
    }
    return r;
}

LayerResult layer_inverse(const FlowLayer& layer, std::span<const double> x, const RootConfig& cfg) {
    const int d = layer.dimension();
    if (x.size() != static_cast<std::size_t>(d)) throw InvalidArgument("layer_inverse: dimension mismatch");
    LayerResult r{std::vector<double>(d), 0.0};
    std::vector<double> prefix;
    prefix.reserve(d);
    for (int k = 0; k < d; ++k) {
        const int j = layer.dim_at(k);
        const BernsteinPoly poly(coupling_coefficients(layer, k, prefix), kUnit);
        double z = 0.0;
        try {
            z = invert_monotone(poly, x[j], cfg).z;
        } catch (const DomainError& e) {
            throw DomainError("layer_inverse (dimension " + std::to_string(j) + "): " + e.what());
        } catch (const NumericError& e) {
            throw NumericError("layer_inverse (dimension " + std::to_string(j) + "): " + e.what());
        }
        r.point[j] = z;
        r.logdet += std::log(eval_with_derivative(poly, z).slope);
        prefix.push_back(z);
    }
    return r;
}

MapResult forward(const FlowModel& model, std::span<const double> z) {
    if (z.size() != static_cast<std::size_t>(model.dimension())) throw InvalidArgument("forward: dimension mismatch");
    std::vector<double> u(z.begin(), z.end());
    double total = 0.0;
    for (const auto& layer : model.layers) {
        auto r = layer_forward(layer, u);
        total += r.logdet;
        u = std::move(r.point);
    }
    total += model.diffeo.log_jacobian(u);
    return {model.diffeo.apply(u), total};
}

MapResult inverse(const FlowModel& model, std::span<const double> x, const RootConfig& cfg) {
    if (x.size() != static_cast<std::size_t>(model.dimension())) throw InvalidArgument("inverse: dimension mismatch");
    std::vector<double> u = model.diffeo.inverse(x);
    double total = model.diffeo.log_jacobian(u);
    for (auto it = model.layers.rbegin(); it != model.layers.rend(); ++it) {
        auto r = layer_inverse(*it, u, cfg);
        total += r.logdet;
        u = std::move(r.point);
    }
    return {std::move(u), -total};
}

double log_density(const FlowModel& model, std::span<const double> x, const RootConfig& cfg) {
    constexpr double kNegInf = -std::numeric_limits<double>::infinity();
    if (!model.diffeo.in_image(x)) return kNegInf;
    try {
        const auto inv = inverse(model, x, cfg);
        const double lp = prior_log_density(model.prior, inv.point);
        if (lp == kNegInf) return kNegInf;
        return lp + inv.logdet;
    } catch (const DomainError&) {
        return kNegInf;
    }
}

std::vector<double> log_density(const FlowModel& model, const Matrix& points, const RootConfig& cfg) {
    if (points.cols() != static_cast<std::size_t>(model.dimension())) {
        throw InvalidArgument("log_density: dimension mismatch between model and points");
    }
    std::vector<double> out(points.rows());
    for (std::size_t i = 0; i < points.rows(); ++i) out[i] = log_density(model, points.row(i), cfg);
    return out;
}

Matrix sample(const FlowModel& model, std::size_t count, std::uint64_t seed) {
    const Matrix z = prior_sample(model.prior, count, seed);
    Matrix x(count, model.dimension());
    for (std::size_t i = 0; i < count; ++i) {
        const auto r = forward(model, z.row(i));
        std::copy(r.point.begin(), r.point.end(), x.row(i).begin());
    }
    return x;
}

std::size_t parameter_count(const FlowModel& model) {
    std::size_t count = 0;
    for (const auto& layer : model.layers) {
        for (const auto& c : layer.couplings) count += c.is_free() ? c.free_raw.size() : c.net->parameter_count();
    }
    return count;
}

std::vector<double> get_parameters(const FlowModel& model) {
    std::vector<double> out;
    out.reserve(parameter_count(model));
    for (const auto& layer : model.layers) {
        for (const auto& c : layer.couplings) {
            const std::span<const double> p = c.is_free() ? std::span<const double>(c.free_raw) : c.net->parameters();
            out.insert(out.end(), p.begin(), p.end());
        }
    }
    return out;
}

void set_parameters(FlowModel& model, std::span<const double> params) {
    if (params.size() != parameter_count(model)) throw InvalidArgument("set_parameters: size mismatch");
    auto it = params.begin();
    for (auto& layer : model.layers) {
        for (auto& c : layer.couplings) {
            const std::span<double> p = c.is_free() ? std::span<double>(c.free_raw) : c.net->parameters();
            std::copy(it, it + static_cast<std::ptrdiff_t>(p.size()), p.begin());
            it += static_cast<std::ptrdiff_t>(p.size());
        }
    }
}

std::vector<ParamGroup> parameter_groups(const FlowModel& model) {
    std::vector<ParamGroup> out;
    out.reserve(parameter_count(model));
    for (const auto& layer : model.layers) {
        for (const auto& c : layer.couplings) {
            if (c.is_free()) out.insert(out.end(), c.free_raw.size(), ParamGroup::FreeCoefficients);
            else out.insert(out.end(), c.net->parameter_count(), ParamGroup::NetWeights);
        }
    }
    return out;
}

}  // namespace bernflow
