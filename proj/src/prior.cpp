#include "bernflow/prior.hpp"

#include "bernflow/errors.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace bernflow {

void PriorSpec::validate() const {
    if (dimension < 1) throw InvalidArgument("PriorSpec: dimension must be positive");
    if (kind == PriorKind::Kumaraswamy && !(a > 0.0 && b > 0.0 && std::isfinite(a) && std::isfinite(b))) {
        throw InvalidArgument("PriorSpec: Kumaraswamy parameters must be positive");
    }
}

PriorSpec PriorSpec::kumaraswamy(double a, double b, int dimension) {
    PriorSpec s{PriorKind::Kumaraswamy, a, b, dimension};
    s.validate();
    return s;
}

PriorSpec PriorSpec::uniform(int dimension) {
    PriorSpec s{PriorKind::UniformUnit, 1.0, 1.0, dimension};
    s.validate();
    return s;
}

PriorSpec PriorSpec::squashed_normal(int dimension) {
    PriorSpec s{PriorKind::SquashedNormal, 1.0, 1.0, dimension};
    s.validate();
    return s;
}

std::string_view to_string(PriorKind kind) {
    switch (kind) {
    case PriorKind::Kumaraswamy: return "kumaraswamy";
    case PriorKind::UniformUnit: return "uniform";
    case PriorKind::SquashedNormal: return "squashed-normal";
    }
    return "?";
}

PriorKind prior_kind_from_string(std::string_view name) {
    if (name == "kumaraswamy") return PriorKind::Kumaraswamy;
    if (name == "uniform") return PriorKind::UniformUnit;
    if (name == "squashed-normal") return PriorKind::SquashedNormal;
    throw InvalidArgument("unknown prior '" + std::string(name) + "'");
}

double kumaraswamy_cdf(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    return 1.0 - std::pow(1.0 - std::pow(x, a), b);
}

double kumaraswamy_inverse_cdf(double a, double b, double u) {
    if (!(u >= 0.0 && u <= 1.0)) throw DomainError("kumaraswamy_inverse_cdf: u outside [0, 1]");
    return std::pow(1.0 - std::pow(1.0 - u, 1.0 / b), 1.0 / a);
}

Matrix prior_sample(const PriorSpec& spec, std::size_t count, std::uint64_t seed) {
    spec.validate();
    Matrix out(count, spec.dimension);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& v : out.data()) {
        switch (spec.kind) {
        case PriorKind::Kumaraswamy: v = kumaraswamy_inverse_cdf(spec.a, spec.b, unif(rng)); break;
        case PriorKind::UniformUnit: v = unif(rng); break;
        case PriorKind::SquashedNormal: v = 0.5 * (1.0 + std::tanh(normal(rng))); break;
        }
    }
    return out;
}

double prior_log_density(const PriorSpec& spec, std::span<const double> z) {
    if (z.size() != static_cast<std::size_t>(spec.dimension)) {
        throw InvalidArgument("prior_log_density: dimension mismatch");
    }
    constexpr double kNegInf = -std::numeric_limits<double>::infinity();
    double total = 0.0;
    for (double u : z) {
        if (!(u > 0.0 && u < 1.0)) return kNegInf;
        switch (spec.kind) {
        case PriorKind::Kumaraswamy:
            total += std::log(spec.a * spec.b) + (spec.a - 1.0) * std::log(u) +
                     (spec.b - 1.0) * std::log1p(-std::pow(u, spec.a));
            break;
        case PriorKind::UniformUnit: break;
        case PriorKind::SquashedNormal: {
            const double s = 0.5 * std::log(u / (1.0 - u));
            total += -0.5 * s * s - 0.5 * std::log(2.0 * std::numbers::pi) - std::log(2.0 * u * (1.0 - u));
            break;
        }
        }
    }
    return total;
}

void prior_log_density_gradient(const PriorSpec& spec, std::span<const double> z, std::span<double> grad) {
    for (std::size_t j = 0; j < z.size(); ++j) {
        const double u = z[j];
        switch (spec.kind) {
        case PriorKind::Kumaraswamy: {
            const double ua = std::pow(u, spec.a);
            grad[j] = (spec.a - 1.0) / u - (spec.b - 1.0) * spec.a * (ua / u) / (1.0 - ua);
            break;
        }
        case PriorKind::UniformUnit: grad[j] = 0.0; break;
        case PriorKind::SquashedNormal: {
            const double s = 0.5 * std::log(u / (1.0 - u));
            const double uv = u * (1.0 - u);
            grad[j] = -s / (2.0 * uv) - (1.0 - 2.0 * u) / uv;
            break;
        }
        }
    }
}

nlohmann::json to_json(const PriorSpec& spec) {
    nlohmann::json j = {{"kind", to_string(spec.kind)}, {"dimension", spec.dimension}};
    if (spec.kind == PriorKind::Kumaraswamy) {
        j["a"] = spec.a;
        j["b"] = spec.b;
    }
    return j;
}

PriorSpec prior_from_json(const nlohmann::json& j) {
    PriorSpec s;
    s.kind = prior_kind_from_string(j.at("kind").get<std::string>());
    s.dimension = j.at("dimension").get<int>();
    if (s.kind == PriorKind::Kumaraswamy) {
        s.a = j.at("a").get<double>();
        s.b = j.at("b").get<double>();
    } else {
        s.a = s.b = 1.0;
    }
    s.validate();
    return s;
}

}  // namespace bernflow
