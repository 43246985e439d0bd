#pragma once

// Inversion of strictly increasing Bernstein-type polynomials.

#include "bernflow/bernstein.hpp"

#include <optional>
#include <vector>

namespace bernflow {

enum class RootMethod { NewtonBisection, BisectionOnly };

struct RootConfig {
    double tol_x = 1e-12;  // bracket width (unit parameter) below which only bisection is used
    // Residual tolerance relative to (alpha_n - alpha_0); absolute value is
    // tol_f_rel * (alpha_n - alpha_0).
    double tol_f_rel = 1e-13;
    int max_iter = 100;
    RootMethod method = RootMethod::NewtonBisection;

    void validate() const;
};

enum class BracketStatus { UniqueInterior, AtLowerEnd, AtUpperEnd, OutOfRange };

BracketStatus root_bracket_check(const BernsteinPoly& p, double x, const RootConfig& cfg = {});

struct RootResult {
    double z;         // in p.domain()
    int iterations;
};

// Solve p(z) = x. `unit_guess` optionally replaces the secant starting point
// (in the unit parameter); it is ignored when outside (0, 1).
RootResult invert_monotone(const BernsteinPoly& p, double x, const RootConfig& cfg = {},
                           std::optional<double> unit_guess = std::nullopt);

// Repeated inversion of one polynomial. A coarse table of p over the unit
// parameter narrows the starting bracket before the Newton iterations.
class MonotoneInverter {
public:
    explicit MonotoneInverter(BernsteinPoly p, RootConfig cfg = {}, int table_size = 64);

    RootResult invert(double x) const;
    const BernsteinPoly& poly() const noexcept { return poly_; }

private:
    BernsteinPoly poly_;
    RootConfig cfg_;
    std::vector<double> table_;  // p at t_i = i / (size - 1)
};

}  // namespace bernflow
