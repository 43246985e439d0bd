#include "bernflow/bernstein.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <sstream>

namespace bernflow {

namespace {

using Workspace = std::array<double, kMaxDegree + 1>;

void check_finite(std::span<const double> values, const char* what) {
    for (double v : values) {
        if (!std::isfinite(v)) throw InvalidArgument(std::string(what) + ": non-finite coefficient");
    }
}

void check_degree(std::size_t length, const char* what) {
    if (length == 0) throw InvalidArgument(std::string(what) + ": empty coefficient vector");
    if (length > static_cast<std::size_t>(kMaxDegree) + 1) {
        throw InvalidArgument(std::string(what) + ": degree exceeds cap of " + std::to_string(kMaxDegree));
    }
}

struct BinomialTable {
    std::vector<std::vector<double>> rows;

    BinomialTable() : rows(kMaxDegree + 1) {
        for (int n = 0; n <= kMaxDegree; ++n) {
            auto& row = rows[n];
            row.resize(n + 1);
            row[0] = 1.0;
            for (int k = 1; k <= n; ++k) row[k] = row[k - 1] * static_cast<double>(n - k + 1) / k;
            // Restore exact symmetry lost to rounding in the recurrence.
            for (int k = 0; k <= n / 2; ++k) row[n - k] = row[k];
        }
    }
};

const BinomialTable& binomials() {
    static const BinomialTable table;
    return table;
}

// Map x onto the unit parameter, snapping near-boundary points. Throws when x
// is farther than kDomainTolerance outside the domain.
double unit_parameter(const Interval& domain, double x, const char* what) {
    if (!std::isfinite(x) || !domain.contains(x)) {
        std::ostringstream os;
        os << what << ": x = " << x << " outside [" << domain.lo << ", " << domain.hi << "]";
        throw DomainError(os.str());
    }
    return std::clamp(domain.to_unit(x), 0.0, 1.0);
}

double decasteljau(std::span<const double> coeffs, double t, Workspace& work) {
    const std::size_t m = coeffs.size();
    std::copy(coeffs.begin(), coeffs.end(), work.begin());
    const double s = 1.0 - t;
    for (std::size_t level = 1; level < m; ++level) {
        for (std::size_t i = 0; i + level < m; ++i) work[i] = s * work[i] + t * work[i + 1];
    }
    return work[0];
}

double power_eval(std::span<const double> coeffs, double x) {
    double acc = 0.0;
    for (std::size_t k = coeffs.size(); k-- > 0;) acc = acc * x + coeffs[k];
    return acc;
}

std::vector<double> power_derivative(std::span<const double> c) {
    if (c.size() <= 1) return {0.0};
    std::vector<double> out(c.size() - 1);
    for (std::size_t k = 1; k < c.size(); ++k) out[k - 1] = static_cast<double>(k) * c[k];
    return out;
}

std::vector<double> bernstein_derivative(std::span<const double> a, double width) {
    if (a.size() <= 1) return {0.0};
    const double n = static_cast<double>(a.size() - 1);
    std::vector<double> out(a.size() - 1);
    for (std::size_t k = 0; k + 1 < a.size(); ++k) out[k] = n * (a[k + 1] - a[k]) / width;
    return out;
}

template <class Poly>
Poly perturb_impl(const Poly& p, double epsilon, std::uint64_t seed) {
    if (!(epsilon >= 0.0)) throw InvalidArgument("perturb_coefficients: epsilon must be non-negative");
    if (epsilon == 0.0) return p;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::vector<double> c = p.coeffs();
    for (double& ck : c) {
        const double u = epsilon * unit(rng);
        ck = (ck != 0.0) ? ck * (1.0 + u) : epsilon * u;
    }
    return Poly(std::move(c), p.domain());
}

}  // namespace

Interval::Interval(double lo_, double hi_) : lo(lo_), hi(hi_) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
        std::ostringstream os;
        os << "Interval: require finite lo < hi, got [" << lo << ", " << hi << "]";
        throw InvalidArgument(os.str());
    }
}

BernsteinPoly::BernsteinPoly(std::vector<double> coeffs, Interval domain)
    : coeffs_(std::move(coeffs)), domain_(domain) {
    check_degree(coeffs_.size(), "BernsteinPoly");
    check_finite(coeffs_, "BernsteinPoly");
}

PowerPoly::PowerPoly(std::vector<double> coeffs, Interval domain) : coeffs_(std::move(coeffs)), domain_(domain) {
    check_degree(coeffs_.size(), "PowerPoly");
    check_finite(coeffs_, "PowerPoly");
}

double binomial(int n, int k) {
    if (n < 0 || n > kMaxDegree) throw InvalidArgument("binomial: degree out of range");
    if (k < 0 || k > n) throw InvalidArgument("binomial: index out of range");
    return binomials().rows[n][k];
}

double basis_at(int n, int k, double x) {
    if (n < 0 || n > kMaxDegree) throw InvalidArgument("basis_at: degree out of range");
    if (k < 0 || k > n) throw InvalidArgument("basis_at: index out of range");
    const double t = unit_parameter(Interval{}, x, "basis_at");
    return binomials().rows[n][k] * std::pow(t, k) * std::pow(1.0 - t, n - k);
}

void basis_vector(int n, double t, std::span<double> out) {
    if (n < 0 || n > kMaxDegree) throw InvalidArgument("basis_vector: degree out of range");
    if (out.size() < static_cast<std::size_t>(n) + 1) throw InvalidArgument("basis_vector: output too small");
    const auto& c = binomials().rows[n];
    const double s = 1.0 - t;
    // out[k] <- t^k, then multiply by (1-t)^(n-k) sweeping downwards.
    double tp = 1.0;
    for (int k = 0; k <= n; ++k) {
        out[k] = tp;
        tp *= t;
    }
    double sp = 1.0;
    for (int k = n; k >= 0; --k) {
        out[k] *= sp * c[k];
        sp *= s;
    }
}

double eval(const BernsteinPoly& p, double x) {
    Workspace work;
    return decasteljau(p.coeffs(), unit_parameter(p.domain(), x, "eval"), work);
}

ClampedValue eval(const BernsteinPoly& p, double x, OutOfDomain policy) {
    if (policy == OutOfDomain::Reject) return {eval(p, x), false};
    if (std::isnan(x)) throw DomainError("eval: NaN input");
    const double xc = std::clamp(x, p.domain().lo, p.domain().hi);
    return {eval(p, xc), !p.domain().contains(x)};
}

ValueAndSlope eval_with_derivative(const BernsteinPoly& p, double x) {
    const double t = unit_parameter(p.domain(), x, "eval_with_derivative");
    const auto& a = p.coeffs();
    const int n = p.degree();
    if (n == 0) return {a[0], 0.0};
    Workspace work;
    std::copy(a.begin(), a.end(), work.begin());
    const double s = 1.0 - t;
    for (int level = 1; level < n; ++level) {
        for (int i = 0; i + level <= n; ++i) work[i] = s * work[i] + t * work[i + 1];
    }
    return {s * work[0] + t * work[1], n * (work[1] - work[0]) / p.domain().width()};
}

double eval_direct(const BernsteinPoly& p, double x) {
    const double t = unit_parameter(p.domain(), x, "eval_direct");
    Workspace basis;
    basis_vector(p.degree(), t, basis);
    double acc = 0.0;
    for (int k = 0; k <= p.degree(); ++k) acc += p.coeffs()[k] * basis[k];
    return acc;
}

double eval(const PowerPoly& p, double x) {
    if (!std::isfinite(x) || !p.domain().contains(x)) throw DomainError("eval: x outside power-basis domain");
    return power_eval(p.coeffs(), x);
}

BernsteinPoly derivative(const BernsteinPoly& p) {
    return BernsteinPoly(bernstein_derivative(p.coeffs(), p.domain().width()), p.domain());
}

PowerPoly derivative(const PowerPoly& p) { return PowerPoly(power_derivative(p.coeffs()), p.domain()); }

BernsteinPoly bernstein_operator(std::span<const double> samples, Interval domain) {
    return BernsteinPoly(std::vector<double>(samples.begin(), samples.end()), domain);
}

BernsteinPoly from_power_basis(const PowerPoly& p, int target_degree) {
    const int m = p.degree();
    if (target_degree < m) throw InvalidArgument("from_power_basis: target degree below polynomial degree");
    if (target_degree > kMaxDegree) throw InvalidArgument("from_power_basis: target degree exceeds cap");
    const double a = p.domain().lo;
    const double w = p.domain().width();
    const auto& c = p.coeffs();

    // Substitute x = a + w t: power coefficients e_i in the unit parameter.
    std::vector<double> e(target_degree + 1, 0.0);
    for (int i = 0; i <= m; ++i) {
        double acc = 0.0;
        double apow = 1.0;
        for (int j = i; j <= m; ++j) {
            acc += c[j] * binomial(j, i) * apow;
            apow *= a;
        }
        e[i] = acc * std::pow(w, i);
    }

    // Unit-domain conversion: alpha_k = sum_{i<=k} C(k,i)/C(n,i) e_i.
    const int n = target_degree;
    std::vector<double> alpha(n + 1, 0.0);
    for (int k = 0; k <= n; ++k) {
        double acc = 0.0;
        for (int i = 0; i <= std::min(k, m); ++i) acc += binomial(k, i) / binomial(n, i) * e[i];
        alpha[k] = acc;
    }
    return BernsteinPoly(std::move(alpha), p.domain());
}

PowerPoly to_power_basis(const BernsteinPoly& p) {
    const int n = p.degree();
    const auto& alpha = p.coeffs();
    std::vector<double> e(n + 1, 0.0);
    for (int i = 0; i <= n; ++i) {
        double acc = 0.0;
        for (int k = 0; k <= i; ++k) acc += (((i - k) % 2) ? -1.0 : 1.0) * binomial(i, k) * alpha[k];
        e[i] = binomial(n, i) * acc;
    }
    // Undo t = (x - a) / w.
    const double a = p.domain().lo;
    const double w = p.domain().width();
    std::vector<double> c(n + 1, 0.0);
    for (int i = 0; i <= n; ++i) {
        const double scaled = e[i] / std::pow(w, i);
        double apow = 1.0;  // (-a)^(i-j) for j = i, i-1, ...
        for (int j = i; j >= 0; --j) {
            c[j] += scaled * binomial(i, j) * apow;
            apow *= -a;
        }
    }
    return PowerPoly(std::move(c), p.domain());
}

double perturbation_bound(Basis basis, std::span<const double> coeffs, Interval domain, double x,
                          double epsilon) {
    check_degree(coeffs.size(), "condition number");
    if (!std::isfinite(x) || !domain.contains(x)) throw DomainError("condition number: x outside domain");
    const double floor = std::max(epsilon, 0.0);
    double acc = 0.0;
    if (basis == Basis::Bernstein) {
        Workspace b;
        const int n = static_cast<int>(coeffs.size()) - 1;
        basis_vector(n, std::clamp(domain.to_unit(x), 0.0, 1.0), b);
        for (int k = 0; k <= n; ++k) acc += std::max(std::abs(coeffs[k]), floor) * b[k];
    } else {
        double xp = 1.0;
        for (double ck : coeffs) {
            acc += std::max(std::abs(ck), floor) * std::abs(xp);
            xp *= x;
        }
    }
    return acc;
}

double value_condition_number(Basis basis, std::span<const double> coeffs, Interval domain, double x) {
    return perturbation_bound(basis, coeffs, domain, x, 0.0);
}

double value_condition_number(const BernsteinPoly& p, double x) {
    return value_condition_number(Basis::Bernstein, p.coeffs(), p.domain(), x);
}

double value_condition_number(const PowerPoly& p, double x) {
    return value_condition_number(Basis::Power, p.coeffs(), p.domain(), x);
}

double root_condition_number(Basis basis, std::span<const double> coeffs, Interval domain, double x0,
                             int multiplicity) {
    if (multiplicity < 1) throw InvalidArgument("root_condition_number: multiplicity must be >= 1");
    const double total = value_condition_number(basis, coeffs, domain, x0);

    std::vector<double> d(coeffs.begin(), coeffs.end());
    double mth = 0.0;
    if (basis == Basis::Bernstein) {
        for (int r = 0; r < multiplicity; ++r) d = bernstein_derivative(d, domain.width());
        mth = eval(BernsteinPoly(d, domain), x0);
    } else {
        for (int r = 0; r < multiplicity; ++r) d = power_derivative(d);
        mth = power_eval(d, x0);
    }
    if (std::abs(mth) < 1e-12) {
        throw MultiplicityError("root_condition_number: derivative of order " + std::to_string(multiplicity) +
                                " vanishes at x0");
    }
    double factorial = 1.0;
    for (int r = 2; r <= multiplicity; ++r) factorial *= r;
    return std::pow(factorial / std::abs(mth) * total, 1.0 / multiplicity);
}

BernsteinPoly perturb_coefficients(const BernsteinPoly& p, double epsilon, std::uint64_t seed) {
    return perturb_impl(p, epsilon, seed);
}

PowerPoly perturb_coefficients(const PowerPoly& p, double epsilon, std::uint64_t seed) {
    return perturb_impl(p, epsilon, seed);
}

nlohmann::json to_json(const BernsteinPoly& p) {
    return {{"degree", p.degree()},
            {"domain", {p.domain().lo, p.domain().hi}},
            {"coeffs", p.coeffs()}};
}

BernsteinPoly bernstein_from_json(const nlohmann::json& j) {
    try {
        const auto coeffs = j.at("coeffs").get<std::vector<double>>();
        const auto dom = j.at("domain").get<std::vector<double>>();
        if (dom.size() != 2) throw InvalidArgument("polynomial JSON: domain must have two entries");
        if (j.at("degree").get<int>() + 1 != static_cast<int>(coeffs.size())) {
            throw InvalidArgument("polynomial JSON: degree does not match coefficient count");
        }
        return BernsteinPoly(coeffs, Interval(dom[0], dom[1]));
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("polynomial JSON: ") + e.what());
    }
}

}  // namespace bernflow
