#pragma once

// Bernstein-basis polynomials on a closed interval: evaluation, the
// Bernstein approximation operator, power-basis conversion and the
// value/root condition numbers used for perturbation analysis.

#include "bernflow/errors.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace bernflow {

inline constexpr int kMaxDegree = 200;

// Points within this distance of an interval endpoint are snapped onto it.
inline constexpr double kDomainTolerance = 1e-12;

struct Interval {
    double lo = 0.0;
    double hi = 1.0;

    Interval() = default;
    Interval(double lo_, double hi_);

    double width() const noexcept { return hi - lo; }
    bool contains(double x, double tol = kDomainTolerance) const noexcept {
        return x >= lo - tol && x <= hi + tol;
    }
    // L_{a,b}: [lo, hi] -> [0, 1].
    double to_unit(double x) const noexcept { return (x - lo) / (hi - lo); }
    double from_unit(double t) const noexcept { return lo + t * (hi - lo); }

    bool operator==(const Interval&) const = default;
};

class BernsteinPoly {
public:
    BernsteinPoly(std::vector<double> coeffs, Interval domain = {});

    int degree() const noexcept { return static_cast<int>(coeffs_.size()) - 1; }
    const std::vector<double>& coeffs() const noexcept { return coeffs_; }
    const Interval& domain() const noexcept { return domain_; }

    bool operator==(const BernsteinPoly&) const = default;

private:
    std::vector<double> coeffs_;
    Interval domain_;
};

// Monomials in the original variable x, i.e. p(x) = sum c_k x^k on `domain`.
class PowerPoly {
public:
    PowerPoly(std::vector<double> coeffs, Interval domain = {});

    int degree() const noexcept { return static_cast<int>(coeffs_.size()) - 1; }
    const std::vector<double>& coeffs() const noexcept { return coeffs_; }
    const Interval& domain() const noexcept { return domain_; }

    bool operator==(const PowerPoly&) const = default;

private:
    std::vector<double> coeffs_;
    Interval domain_;
};

enum class Basis { Bernstein, Power };

enum class OutOfDomain { Reject, Clamp };

struct ClampedValue {
    double value;
    bool clamped;
};

// C(n, k) in floating point, from a table built once by multiplicative
// recurrence for every n <= kMaxDegree.
double binomial(int n, int k);

double basis_at(int n, int k, double x);

// b_{0,n}(t) ... b_{n,n}(t) in O(n); `out` must hold n + 1 values.
void basis_vector(int n, double t, std::span<double> out);

double eval(const BernsteinPoly& p, double x);
ClampedValue eval(const BernsteinPoly& p, double x, OutOfDomain policy);

struct ValueAndSlope {
    double value;
    double slope;  // d/dx in the units of p.domain()
};

// One de Casteljau pass yields both p(x) and p'(x).
ValueAndSlope eval_with_derivative(const BernsteinPoly& p, double x);

// Reference evaluation by direct summation of the basis; kept for tests.
double eval_direct(const BernsteinPoly& p, double x);

double eval(const PowerPoly& p, double x);

BernsteinPoly derivative(const BernsteinPoly& p);
PowerPoly derivative(const PowerPoly& p);

BernsteinPoly bernstein_operator(std::span<const double> samples, Interval domain = {});

BernsteinPoly from_power_basis(const PowerPoly& p, int target_degree);
PowerPoly to_power_basis(const BernsteinPoly& p);

double value_condition_number(Basis basis, std::span<const double> coeffs, Interval domain, double x);
double value_condition_number(const BernsteinPoly& p, double x);
double value_condition_number(const PowerPoly& p, double x);

// Sum_k max(|c_k|, eps) |phi_k(x)|: the bound that also covers the additive
// perturbation applied to zero coefficients.
double perturbation_bound(Basis basis, std::span<const double> coeffs, Interval domain, double x,
                          double epsilon);

double root_condition_number(Basis basis, std::span<const double> coeffs, Interval domain, double x0,
                             int multiplicity);

// Each c_k becomes c_k (1 + u_k) with u_k ~ U(-eps, eps); zero coefficients
// become eps * u_k.
BernsteinPoly perturb_coefficients(const BernsteinPoly& p, double epsilon, std::uint64_t seed);
PowerPoly perturb_coefficients(const PowerPoly& p, double epsilon, std::uint64_t seed);

nlohmann::json to_json(const BernsteinPoly& p);
BernsteinPoly bernstein_from_json(const nlohmann::json& j);

}  // namespace bernflow
