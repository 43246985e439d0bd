#pragma once

// Unconstrained raw parameters -> strictly increasing Bernstein coefficient
// vectors whose first and last entries are pinned to a target range.

#include "bernflow/bernstein.hpp"
#include "bernflow/matrix.hpp"

#include <span>
#include <string_view>
#include <vector>

namespace bernflow {

enum class Scheme {
    // Increments softplus(v_k) plus a reference increment softplus(0) for the
    // last gap; partial sums are rescaled onto [c, d].
    CumulativePositive,
    // alpha_{n-k} = c + (d - c) / (1 + v_1^2 + ... + v_k^2), with alpha_0 = c
    // and alpha_n = d pinned.
    ReciprocalSquare,
};

std::string_view to_string(Scheme scheme);
Scheme scheme_from_string(std::string_view name);

struct MonotoneParams {
    std::vector<double> raw;  // n - 1 interior parameters
    Interval range;
    Scheme scheme = Scheme::CumulativePositive;
};

// Minimum gap between consecutive coefficients: 1e-6 of the range width.
inline constexpr double kGapFraction = 1e-6;
double mono_gap(const Interval& range);

std::vector<double> to_coefficients(std::span<const double> raw, const Interval& range, Scheme scheme, int n);
std::vector<double> to_coefficients(const MonotoneParams& p, int n);

// True iff every consecutive difference is at least `min_gap`. Without an
// explicit gap the threshold is mono_gap([a_0, a_n]).
bool check_strictly_increasing(std::span<const double> alphas);
bool check_strictly_increasing(std::span<const double> alphas, double min_gap);

// Dense (n+1) x (n-1) matrix d alpha_k / d v_j. Rows 0 and n are zero.
Matrix parameterization_jacobian(std::span<const double> raw, const Interval& range, Scheme scheme, int n);
Matrix parameterization_jacobian(const MonotoneParams& p, int n);

// raw_grad += J^T coeff_grad, in O(n) without forming J.
void accumulate_raw_gradient(std::span<const double> raw, const Interval& range, Scheme scheme, int n,
                             std::span<const double> coeff_grad, std::span<double> raw_grad);

}  // namespace bernflow
