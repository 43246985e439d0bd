#include "bernflow/diffeo.hpp"

#include <cmath>

namespace bernflow {

namespace {

void check_dim(std::size_t got, std::size_t want, const char* what) {
    if (got != want) throw InvalidArgument(std::string(what) + ": dimension mismatch");
}

}  // namespace

TargetDiffeo TargetDiffeo::identity(int dimension) {
    if (dimension < 1) throw InvalidArgument("TargetDiffeo: dimension must be positive");
    return affine(std::vector<Interval>(dimension));
}

TargetDiffeo TargetDiffeo::affine(std::vector<Interval> src, std::vector<Interval> dst) {
    if (src.empty() || src.size() != dst.size()) throw InvalidArgument("TargetDiffeo::affine: bad box sizes");
    TargetDiffeo h;
    h.kind_ = Kind::Affine;
    h.dim_ = src.size();
    h.src_ = std::move(src);
    h.dst_ = std::move(dst);
    return h;
}

TargetDiffeo TargetDiffeo::affine(std::vector<Interval> dst) {
    std::vector<Interval> src(dst.size());
    return affine(std::move(src), std::move(dst));
}

TargetDiffeo TargetDiffeo::tanh_squash(std::vector<double> scale, std::vector<double> shift) {
    if (scale.empty() || scale.size() != shift.size()) throw InvalidArgument("TargetDiffeo::tanh_squash: bad sizes");
    for (std::size_t j = 0; j < scale.size(); ++j) {
        if (!(scale[j] > 0.0) || !std::isfinite(scale[j]) || !std::isfinite(shift[j])) {
            throw InvalidArgument("TargetDiffeo::tanh_squash: scale must be positive and finite");
        }
    }
    TargetDiffeo h;
    h.kind_ = Kind::TanhSquash;
    h.dim_ = scale.size();
    h.scale_ = std::move(scale);
    h.shift_ = std::move(shift);
    return h;
}

std::vector<double> TargetDiffeo::apply(std::span<const double> y) const {
    check_dim(y.size(), dim_, "diffeo_apply");
    std::vector<double> x(dim_);
    for (std::size_t j = 0; j < dim_; ++j) {
        if (kind_ == Kind::Affine) {
            if (!src_[j].contains(y[j])) throw DomainError("diffeo_apply: point outside model box");
            x[j] = dst_[j].lo + src_[j].to_unit(y[j]) * dst_[j].width();
        } else {
            if (!(y[j] > 0.0 && y[j] < 1.0)) throw DomainError("diffeo_apply: point outside open unit box");
            x[j] = shift_[j] + scale_[j] * 0.5 * std::log(y[j] / (1.0 - y[j]));
        }
    }
    return x;
}

std::vector<double> TargetDiffeo::inverse(std::span<const double> x) const {
    check_dim(x.size(), dim_, "diffeo_inverse");
    std::vector<double> y(dim_);
    for (std::size_t j = 0; j < dim_; ++j) {
        if (!std::isfinite(x[j])) throw DomainError("diffeo_inverse: non-finite point");
        if (kind_ == Kind::Affine) {
            if (!dst_[j].contains(x[j])) throw DomainError("diffeo_inverse: point outside data box");
            y[j] = src_[j].lo + dst_[j].to_unit(x[j]) * src_[j].width();
        } else {
            y[j] = 0.5 * (1.0 + std::tanh((x[j] - shift_[j]) / scale_[j]));
        }
    }
    return y;
}

double TargetDiffeo::log_jacobian(std::span<const double> y) const {
    check_dim(y.size(), dim_, "diffeo_logjac");
    double total = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) {
        if (kind_ == Kind::Affine) {
            total += std::log(dst_[j].width() / src_[j].width());
        } else {
            if (!(y[j] > 0.0 && y[j] < 1.0)) throw DomainError("diffeo_logjac: point outside open unit box");
            total += std::log(scale_[j]) - std::log(2.0 * y[j] * (1.0 - y[j]));
        }
    }
    return total;
}

bool TargetDiffeo::in_image(std::span<const double> x) const {
    if (x.size() != dim_) return false;
    for (std::size_t j = 0; j < dim_; ++j) {
        if (!std::isfinite(x[j])) return false;
        if (kind_ == Kind::Affine && !dst_[j].contains(x[j])) return false;
    }
    return true;
}

std::vector<double> diffeo_apply(const TargetDiffeo& h, std::span<const double> y) { return h.apply(y); }
std::vector<double> diffeo_inverse(const TargetDiffeo& h, std::span<const double> x) { return h.inverse(x); }
double diffeo_logjac(const TargetDiffeo& h, std::span<const double> y) { return h.log_jacobian(y); }

nlohmann::json to_json(const TargetDiffeo& h) {
    if (h.kind() == TargetDiffeo::Kind::Affine) {
        auto box = [](const std::vector<Interval>& b) {
            nlohmann::json arr = nlohmann::json::array();
            for (const auto& iv : b) arr.push_back({iv.lo, iv.hi});
            return arr;
        };
        return {{"kind", "affine"}, {"src", box(h.src())}, {"dst", box(h.dst())}};
    }
    return {{"kind", "tanh-squash"}, {"scale", h.scale()}, {"shift", h.shift()}};
}

TargetDiffeo diffeo_from_json(const nlohmann::json& j) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "affine") {
        auto box = [](const nlohmann::json& arr) {
            std::vector<Interval> out;
            for (const auto& iv : arr) out.emplace_back(iv.at(0).get<double>(), iv.at(1).get<double>());
            return out;
        };
        return TargetDiffeo::affine(box(j.at("src")), box(j.at("dst")));
    }
    if (kind == "tanh-squash") {
        return TargetDiffeo::tanh_squash(j.at("scale").get<std::vector<double>>(),
                                         j.at("shift").get<std::vector<double>>());
    }
    throw InvalidArgument("unknown diffeo kind '" + kind + "'");
}

}  // namespace bernflow
