#include "bernflow/rootfind.hpp"

#include "bernflow/monotone.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bernflow {

namespace {

struct Bracket {
    double lo;
    double hi;
};

double abs_tol_f(const BernsteinPoly& p, const RootConfig& cfg) {
    const auto& a = p.coeffs();
    return cfg.tol_f_rel * (a.back() - a.front());
}

void require_monotone(const BernsteinPoly& p) {
    if (!check_strictly_increasing(p.coeffs())) {
        throw InvalidArgument("root finder: coefficients are not strictly increasing");
    }
}

// Works in the unit parameter t; f(t) = p(t) - x with f(lo) <= 0 < f(hi).
// Safeguarded Newton: a Newton step is taken only when it stays inside the
// bracket and the residual is shrinking fast enough, otherwise bisect.
// Returns once |f| <= tol_f, or with the best iterate when the bracket has
// no representable interior point left.
RootResult solve(const BernsteinPoly& p, double x, const RootConfig& cfg, Bracket br, double t) {
    // Residual in the shifted form sum (alpha_k - x) b_k(t): rounding scales
    // with the coefficient spread, not with their offset.
    std::vector<double> shifted(p.coeffs());
    for (double& a : shifted) a -= x;
    const BernsteinPoly q(std::move(shifted), Interval{});
    const double tol_f = abs_tol_f(p, cfg);
    const bool newton = cfg.method == RootMethod::NewtonBisection;
    if (!newton) t = 0.5 * (br.lo + br.hi);

    double best_t = t;
    double best_f = INFINITY;
    double dx_old = br.hi - br.lo;
    for (int it = 1; it <= cfg.max_iter; ++it) {
        const auto [f, slope] = eval_with_derivative(q, t);
        if (std::abs(f) < std::abs(best_f)) {
            best_f = f;
            best_t = t;
        }
        if (std::abs(f) <= tol_f) return {p.domain().from_unit(t), it};
        if (f < 0.0) br.lo = t; else br.hi = t;
        // Below tol_x the Newton step is rounding noise; bisect down to the residual tolerance.
        const bool fine = br.hi - br.lo <= cfg.tol_x;

        const double dx = newton && !fine && std::abs(slope) >= 1e-14 ? f / slope : INFINITY;
        const double candidate = t - dx;
        const bool inside = candidate > br.lo && candidate < br.hi;
        if (inside && std::abs(2.0 * dx) <= std::abs(dx_old)) {
            dx_old = dx;
            t = candidate;
        } else {
            dx_old = 0.5 * (br.hi - br.lo);
            t = br.lo + dx_old;
        }
        if (t == br.lo || t == br.hi) return {p.domain().from_unit(best_t), it};  // bracket at double resolution
    }
    std::ostringstream os;
    os.precision(17);
    os << "invert_monotone: no convergence after " << cfg.max_iter << " iterations (x = " << x
       << ", residual " << best_f << ", tol_f " << tol_f << ")";
    throw NumericError(os.str());
}

}  // namespace

void RootConfig::validate() const {
    if (!(tol_x > 0.0) || !(tol_f_rel > 0.0)) throw InvalidArgument("RootConfig: tolerances must be positive");
    if (max_iter < 1) throw InvalidArgument("RootConfig: max_iter must be >= 1");
}

BracketStatus root_bracket_check(const BernsteinPoly& p, double x, const RootConfig& cfg) {
    require_monotone(p);
    const double a0 = p.coeffs().front();
    const double an = p.coeffs().back();
    const double tol = abs_tol_f(p, cfg);
    if (std::abs(x - a0) <= tol) return BracketStatus::AtLowerEnd;
    if (std::abs(x - an) <= tol) return BracketStatus::AtUpperEnd;
    if ((a0 - x) * (an - x) < 0.0) return BracketStatus::UniqueInterior;
    return BracketStatus::OutOfRange;
}

RootResult invert_monotone(const BernsteinPoly& p, double x, const RootConfig& cfg, std::optional<double> unit_guess) {
    cfg.validate();
    switch (root_bracket_check(p, x, cfg)) {
    case BracketStatus::AtLowerEnd: return {p.domain().lo, 0};
    case BracketStatus::AtUpperEnd: return {p.domain().hi, 0};
    case BracketStatus::OutOfRange: {
        std::ostringstream os;
        os << "invert_monotone: x = " << x << " outside range [" << p.coeffs().front() << ", "
           << p.coeffs().back() << "]";
        throw DomainError(os.str());
    }
    case BracketStatus::UniqueInterior: break;
    }
    const double a0 = p.coeffs().front();
    const double an = p.coeffs().back();
    double t = (x - a0) / (an - a0);
    if (unit_guess && *unit_guess > 0.0 && *unit_guess < 1.0) t = *unit_guess;
    return solve(p, x, cfg, {0.0, 1.0}, t);
}

MonotoneInverter::MonotoneInverter(BernsteinPoly p, RootConfig cfg, int table_size)
    : poly_(std::move(p)), cfg_(cfg) {
    cfg_.validate();
    require_monotone(poly_);
    table_size = std::max(table_size, 2);
    table_.resize(table_size);
    const BernsteinPoly unit(poly_.coeffs(), Interval{});
    for (int i = 0; i < table_size; ++i) table_[i] = eval(unit, static_cast<double>(i) / (table_size - 1));
    table_.front() = poly_.coeffs().front();
    table_.back() = poly_.coeffs().back();
}

RootResult MonotoneInverter::invert(double x) const {
    switch (root_bracket_check(poly_, x, cfg_)) {
    case BracketStatus::AtLowerEnd: return {poly_.domain().lo, 0};
    case BracketStatus::AtUpperEnd: return {poly_.domain().hi, 0};
    case BracketStatus::OutOfRange: throw DomainError("MonotoneInverter: x outside polynomial range");
    case BracketStatus::UniqueInterior: break;
    }
    // Cell i with table_[i] <= x < table_[i+1]; secant start inside it.
    const auto it = std::upper_bound(table_.begin(), table_.end(), x);
    const std::size_t hi = std::clamp<std::size_t>(it - table_.begin(), 1, table_.size() - 1);
    const std::size_t lo = hi - 1;
    const double step = 1.0 / static_cast<double>(table_.size() - 1);
    const double t_lo = lo * step;
    const double t_hi = hi * step;
    const double frac = (x - table_[lo]) / (table_[hi] - table_[lo]);
    const double t = t_lo + std::clamp(frac, 0.0, 1.0) * (t_hi - t_lo);
    return solve(poly_, x, cfg_, {t_lo, t_hi}, t);
}

}  // namespace bernflow
