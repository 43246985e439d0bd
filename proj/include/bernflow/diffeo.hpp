#pragma once

// Fixed diffeomorphism h from the model box to the data region. Training on
// h^{-1}(data) leaves the maximum-likelihood solution unchanged; reported
// log-densities add -log|J_h|.

#include "bernflow/bernstein.hpp"

#include <span>
#include <vector>

#include <json.hpp>

namespace bernflow {

class TargetDiffeo {
public:
    enum class Kind { Affine, TanhSquash };

    static TargetDiffeo identity(int dimension);
    // Per-dimension affine map from `src` onto `dst`.
    static TargetDiffeo affine(std::vector<Interval> src, std::vector<Interval> dst);
    // Unit box onto `dst`.
    static TargetDiffeo affine(std::vector<Interval> dst);
    // x = shift + scale * atanh(2y - 1), y in (0,1).
    static TargetDiffeo tanh_squash(std::vector<double> scale, std::vector<double> shift);

    Kind kind() const noexcept { return kind_; }
    int dimension() const noexcept { return static_cast<int>(dim_); }

    std::vector<double> apply(std::span<const double> y) const;
    std::vector<double> inverse(std::span<const double> x) const;
    double log_jacobian(std::span<const double> y) const;  // log|det dh/dy|

    // True when x lies in the image of h (closed box for Affine).
    bool in_image(std::span<const double> x) const;

    const std::vector<Interval>& src() const noexcept { return src_; }
    const std::vector<Interval>& dst() const noexcept { return dst_; }
    const std::vector<double>& scale() const noexcept { return scale_; }
    const std::vector<double>& shift() const noexcept { return shift_; }

private:
    Kind kind_ = Kind::Affine;
    std::size_t dim_ = 0;
    std::vector<Interval> src_, dst_;
    std::vector<double> scale_, shift_;
};

std::vector<double> diffeo_apply(const TargetDiffeo& h, std::span<const double> y);
std::vector<double> diffeo_inverse(const TargetDiffeo& h, std::span<const double> x);
double diffeo_logjac(const TargetDiffeo& h, std::span<const double> y);

nlohmann::json to_json(const TargetDiffeo& h);
TargetDiffeo diffeo_from_json(const nlohmann::json& j);

}  // namespace bernflow
