#include "bernflow/monotone.hpp"

#include <cmath>
#include <string>

namespace bernflow {

namespace {

// Build with a slightly larger gap than the one checked so that rounding in
// the affine rescale never drops a difference below mono_gap.
constexpr double kBuildGapFraction = kGapFraction * 1.0001;

double softplus(double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); }

double sigmoid(double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
}

void validate(std::span<const double> raw, int n) {
    if (n < 1) throw InvalidArgument("monotone parameterization: degree must be >= 1");
    if (n > kMaxDegree) throw InvalidArgument("monotone parameterization: degree exceeds cap");
    if (raw.size() != static_cast<std::size_t>(n - 1)) {
        throw InvalidArgument("monotone parameterization: expected " + std::to_string(n - 1) +
                              " raw values, got " + std::to_string(raw.size()));
    }
    for (double v : raw) {
        if (!std::isfinite(v)) throw InvalidArgument("monotone parameterization: non-finite raw value");
    }
}

// Unit-range shape q_k in [0, 1], q_0 = 0, q_n = 1, plus the per-scheme
// partial quantities needed by the Jacobian.
struct Shape {
    std::vector<double> q;
    std::vector<double> partial;  // S_k (cumulative) or Q_k (reciprocal)
    double total = 1.0;           // S_n (cumulative only)
};

Shape shape(std::span<const double> raw, Scheme scheme, int n) {
    Shape s;
    s.q.assign(n + 1, 0.0);
    s.partial.assign(n + 1, 0.0);
    if (scheme == Scheme::CumulativePositive) {
        double acc = 0.0;
        for (int k = 1; k <= n - 1; ++k) {
            acc += softplus(raw[k - 1]);
            s.partial[k] = acc;
        }
        s.total = acc + std::log(2.0);
        s.partial[n] = s.total;
        for (int k = 1; k <= n - 1; ++k) s.q[k] = s.partial[k] / s.total;
    } else {
        double acc = 1.0;
        for (int k = 1; k <= n - 1; ++k) {
            acc += raw[k - 1] * raw[k - 1];
            s.partial[k] = acc;
        }
        for (int k = 1; k <= n - 1; ++k) s.q[n - k] = 1.0 / s.partial[k];
    }
    s.q[n] = 1.0;
    return s;
}

}  // namespace

std::string_view to_string(Scheme scheme) {
    return scheme == Scheme::CumulativePositive ? "cumulative-positive" : "reciprocal-square";
}

Scheme scheme_from_string(std::string_view name) {
    if (name == "cumulative-positive") return Scheme::CumulativePositive;
    if (name == "reciprocal-square") return Scheme::ReciprocalSquare;
    throw InvalidArgument("unknown monotone scheme '" + std::string(name) + "'");
}

double mono_gap(const Interval& range) { return kGapFraction * range.width(); }

std::vector<double> to_coefficients(std::span<const double> raw, const Interval& range, Scheme scheme, int n) {
    validate(raw, n);
    const Shape s = shape(raw, scheme, n);
    const double w = range.width();
    const double delta = kBuildGapFraction;
    const double spread = 1.0 - n * delta;
    std::vector<double> alpha(n + 1);
    alpha[0] = range.lo;
    for (int k = 1; k < n; ++k) alpha[k] = range.lo + w * (k * delta + spread * s.q[k]);
    alpha[n] = range.hi;
    return alpha;
}

std::vector<double> to_coefficients(const MonotoneParams& p, int n) {
    return to_coefficients(p.raw, p.range, p.scheme, n);
}

bool check_strictly_increasing(std::span<const double> alphas) {
    if (alphas.size() < 2) return true;
    const double span = alphas.back() - alphas.front();
    if (!(span > 0.0)) return false;
    return check_strictly_increasing(alphas, kGapFraction * span);
}

bool check_strictly_increasing(std::span<const double> alphas, double min_gap) {
    for (std::size_t k = 1; k < alphas.size(); ++k) {
        if (!(alphas[k] - alphas[k - 1] >= min_gap)) return false;
    }
    return true;
}

Matrix parameterization_jacobian(std::span<const double> raw, const Interval& range, Scheme scheme, int n) {
    validate(raw, n);
    Matrix jac(n + 1, n - 1);
    if (n < 2) return jac;
    const Shape s = shape(raw, scheme, n);
    const double scale = range.width() * (1.0 - n * kBuildGapFraction);
    if (scheme == Scheme::CumulativePositive) {
        for (int j = 1; j <= n - 1; ++j) {
            const double dg = sigmoid(raw[j - 1]);
            for (int k = 1; k <= n - 1; ++k) {
                const double inside = (j <= k) ? 1.0 / s.total : 0.0;
                jac(k, j - 1) = scale * dg * (inside - s.partial[k] / (s.total * s.total));
            }
        }
    } else {
        for (int i = 1; i <= n - 1; ++i) {
            for (int k = i; k <= n - 1; ++k) {
                const double Q = s.partial[k];
                jac(n - k, i - 1) = scale * (-2.0 * raw[i - 1]) / (Q * Q);
            }
        }
    }
    return jac;
}

Matrix parameterization_jacobian(const MonotoneParams& p, int n) {
    return parameterization_jacobian(p.raw, p.range, p.scheme, n);
}

void accumulate_raw_gradient(std::span<const double> raw, const Interval& range, Scheme scheme, int n,
                             std::span<const double> coeff_grad, std::span<double> raw_grad) {
    if (n < 2) return;
    const Shape s = shape(raw, scheme, n);
    const double scale = range.width() * (1.0 - n * kBuildGapFraction);
    if (scheme == Scheme::CumulativePositive) {
        double weighted = 0.0;
        for (int k = 1; k <= n - 1; ++k) weighted += coeff_grad[k] * s.partial[k];
        const double common = weighted / (s.total * s.total);
        double suffix = 0.0;
        for (int j = n - 1; j >= 1; --j) {
            suffix += coeff_grad[j];
            raw_grad[j - 1] += scale * sigmoid(raw[j - 1]) * (suffix / s.total - common);
        }
    } else {
        double suffix = 0.0;
        for (int i = n - 1; i >= 1; --i) {
            const double Q = s.partial[i];
            suffix += coeff_grad[n - i] / (Q * Q);
            raw_grad[i - 1] += scale * (-2.0 * raw[i - 1]) * suffix;
        }
    }
}

}  // namespace bernflow
