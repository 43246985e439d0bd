#include "bernflow/datasets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

namespace bernflow {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& line, char delimiter) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, delimiter)) out.push_back(trim(field));
    if (!line.empty() && line.back() == delimiter) out.emplace_back();
    return out;
}

}  // namespace

Matrix Dataset::original_points() const {
    Matrix out(points.rows(), points.cols());
    for (std::size_t i = 0; i < points.rows(); ++i) {
        const auto x = rescale_diffeo.apply(points.row(i));
        std::copy(x.begin(), x.end(), out.row(i).begin());
    }
    return out;
}

void Dataset::validate() const {
    if (support_box.size() != points.cols()) throw InvalidArgument("Dataset: support box dimension mismatch");
    if (rescale_diffeo.dimension() != dimension()) throw InvalidArgument("Dataset: rescale dimension mismatch");
    for (std::size_t i = 0; i < points.rows(); ++i) {
        for (std::size_t j = 0; j < points.cols(); ++j) {
            const double v = points(i, j);
            const Interval& box = support_box[j];
            if (!(v >= box.lo + kSupportMargin && v <= box.hi - kSupportMargin)) {
                throw DomainError("Dataset: point " + std::to_string(i) + " outside the support box in dimension " +
                                  std::to_string(j));
            }
        }
    }
}

void MixtureSpec1D::validate() const {
    if (means.empty()) throw InvalidArgument("MixtureSpec1D: no components");
    if (variances.size() != means.size() || weights.size() != means.size()) {
        throw InvalidArgument("MixtureSpec1D: means, variances and weights must have equal length");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < means.size(); ++i) {
        if (!std::isfinite(means[i])) throw InvalidArgument("MixtureSpec1D: non-finite mean");
        if (!(variances[i] > 0.0) || !std::isfinite(variances[i])) {
            throw InvalidArgument("MixtureSpec1D: variances must be positive");
        }
        if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) {
            throw InvalidArgument("MixtureSpec1D: weights must be non-negative");
        }
        total += weights[i];
    }
    if (!(total > 0.0)) throw InvalidArgument("MixtureSpec1D: weights sum to zero");
}

std::vector<double> MixtureSpec1D::normalized_weights() const {
    validate();
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    std::vector<double> w(weights);
    for (double& v : w) v /= total;
    return w;
}

MixtureSpec1D MixtureSpec1D::five_gaussians() {
    return {{-5.0, -2.0, 0.0, 2.0, 5.0}, {1.5, 2.0, 1.0, 2.0, 1.0}, {0.2, 0.2, 0.2, 0.2, 0.2}};
}

MixtureSpec1D MixtureSpec1D::seven_gaussians() {
    return {{-7.0, -5.0, -2.0, 0.0, 2.0, 5.0, 7.0},
            {1.0, 1.0, 2.0, 2.0, 2.0, 1.0, 1.0},
            {0.8, 0.2, 0.2, 0.6, 0.2, 0.2, 0.8}};
}

double mixture_pdf(const MixtureSpec1D& spec, double x) {
    const auto w = spec.normalized_weights();
    double p = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double var = spec.variances[i];
        const double r = x - spec.means[i];
        p += w[i] * std::exp(-0.5 * r * r / var) / std::sqrt(2.0 * std::numbers::pi * var);
    }
    return p;
}

Matrix sample_mixture(const MixtureSpec1D& spec, std::size_t count, std::uint64_t seed) {
    if (count < 1) throw InvalidArgument("sample_mixture: count must be >= 1");
    const auto w = spec.normalized_weights();
    std::mt19937_64 rng(seed);
    std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix out(count, 1);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t c = pick(rng);
        out(i, 0) = spec.means[c] + std::sqrt(spec.variances[c]) * normal(rng);
    }
    return out;
}

Dataset gaussian_mixture_1d(const MixtureSpec1D& spec, std::size_t count, std::uint64_t seed, double margin) {
    std::ostringstream os;
    os << "gaussian mixture (" << spec.means.size() << " components), n=" << count << ", seed=" << seed;
    return rescale_to_box(sample_mixture(spec, count, seed), margin, os.str());
}

Matrix toy2d_raw(std::string_view name, std::size_t count, std::uint64_t seed) {
    if (count < 1) throw InvalidArgument("toy2d: count must be >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    constexpr double pi = std::numbers::pi;
    Matrix out(count, 2);
    if (name == "moons") {
        for (std::size_t i = 0; i < count; ++i) {
            const double a = pi * unif(rng);
            const bool upper = i % 2 == 0;
            const double x = upper ? std::cos(a) : 1.0 - std::cos(a);
            const double y = upper ? std::sin(a) : 0.5 - std::sin(a);
            out(i, 0) = x + 0.05 * normal(rng);
            out(i, 1) = y + 0.05 * normal(rng);
        }
    } else if (name == "rings") {
        for (std::size_t i = 0; i < count; ++i) {
            const double inner = i % 2 == 0 ? 1.0 : 2.0;
            const double r = inner + 0.25 * unif(rng);
            const double a = 2.0 * pi * unif(rng);
            out(i, 0) = r * std::cos(a);
            out(i, 1) = r * std::sin(a);
        }
    } else if (name == "checkerboard") {
        std::uniform_int_distribution<int> coin(0, 1);
        for (std::size_t i = 0; i < count; ++i) {
            const double x = 4.0 * unif(rng) - 2.0;
            const int column = static_cast<int>(std::floor(x));
            const int parity = ((column % 2) + 2) % 2;
            out(i, 0) = x;
            out(i, 1) = unif(rng) - 2.0 * coin(rng) + parity;
        }
    } else if (name == "pinwheel") {
        constexpr int arms = 5;
        constexpr double radial_std = 0.3;
        constexpr double tangential_std = 0.1;
        constexpr double rate = 0.25;
        for (std::size_t i = 0; i < count; ++i) {
            const double r = 1.0 + radial_std * normal(rng);
            const double t = tangential_std * normal(rng);
            const double angle = 2.0 * pi * static_cast<double>(i % arms) / arms + rate * std::exp(r);
            out(i, 0) = std::cos(angle) * r - std::sin(angle) * t;
            out(i, 1) = std::sin(angle) * r + std::cos(angle) * t;
        }
    } else {
        throw InvalidArgument("toy2d: unknown dataset '" + std::string(name) +
                              "' (expected moons, rings, checkerboard or pinwheel)");
    }
    return out;
}

Dataset toy2d(std::string_view name, std::size_t count, std::uint64_t seed, double margin) {
    std::ostringstream os;
    os << "toy stand-in '" << name << "', n=" << count << ", seed=" << seed;
    return rescale_to_box(toy2d_raw(name, count, seed), margin, os.str());
}

TargetDiffeo fit_rescale(const Matrix& points, double margin) {
    if (!(margin >= kSupportMargin && margin < 0.5)) throw InvalidArgument("rescale: margin must be in [1e-6, 0.5)");
    if (points.rows() < 2) throw InvalidArgument("rescale: need at least 2 points");
    std::vector<Interval> dst;
    for (std::size_t j = 0; j < points.cols(); ++j) {
        double lo = INFINITY;
        double hi = -INFINITY;
        for (std::size_t i = 0; i < points.rows(); ++i) {
            const double v = points(i, j);
            if (!std::isfinite(v)) throw InvalidArgument("rescale: non-finite value in dimension " + std::to_string(j));
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (!(hi > lo)) throw InvalidArgument("rescale: zero spread in dimension " + std::to_string(j));
        const double width = (hi - lo) / (1.0 - 2.0 * margin);
        const double start = lo - margin * width;
        dst.emplace_back(start, start + width);
    }
    return TargetDiffeo::affine(std::move(dst));
}

Dataset rescale_to_box(const Matrix& points, double margin, std::string provenance) {
    const TargetDiffeo h = fit_rescale(points, margin);
    Dataset ds{Matrix(points.rows(), points.cols()), std::vector<Interval>(points.cols()), std::move(provenance), h};
    for (std::size_t i = 0; i < points.rows(); ++i) {
        auto y = h.inverse(points.row(i));
        // The range endpoints land on margin and 1 - margin up to rounding.
        for (double& v : y) v = std::clamp(v, margin, 1.0 - margin);
        std::copy(y.begin(), y.end(), ds.points.row(i).begin());
    }
    ds.validate();
    return ds;
}

Dataset apply_rescale(const Matrix& points, const TargetDiffeo& rescale, std::string provenance) {
    if (points.cols() != static_cast<std::size_t>(rescale.dimension())) {
        throw InvalidArgument("apply_rescale: dimension mismatch");
    }
    Dataset ds{Matrix(points.rows(), points.cols()), std::vector<Interval>(points.cols()), std::move(provenance),
               rescale};
    for (std::size_t i = 0; i < points.rows(); ++i) {
        const auto y = rescale.inverse(points.row(i));
        std::copy(y.begin(), y.end(), ds.points.row(i).begin());
    }
    ds.validate();
    return ds;
}

Dataset add_uniform_noise(const Dataset& ds, double magnitude, std::uint64_t seed) {
    if (!(magnitude >= 0.0) || !std::isfinite(magnitude)) {
        throw InvalidArgument("add_uniform_noise: magnitude must be non-negative");
    }
    Dataset out = ds;
    if (magnitude == 0.0) return out;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, magnitude);
    Matrix original = ds.original_points();
    for (double& v : original.data()) v += unif(rng);
    for (std::size_t i = 0; i < original.rows(); ++i) {
        auto y = ds.rescale_diffeo.inverse(original.row(i));
        for (double& v : y) v = std::clamp(v, kSupportMargin, 1.0 - kSupportMargin);
        std::copy(y.begin(), y.end(), out.points.row(i).begin());
    }
    std::ostringstream os;
    os << ds.provenance << "; uniform noise [0, " << magnitude << "], seed=" << seed;
    out.provenance = os.str();
    return out;
}

Matrix load_csv(const std::string& path, bool has_header, char delimiter) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("load_csv: cannot open '" + path + "'");
    Matrix out;
    std::string line;
    std::size_t row = 0;
    std::size_t width = 0;
    std::vector<double> values;
    while (std::getline(in, line)) {
        ++row;
        if (has_header && row == 1) continue;
        if (trim(line).empty()) continue;
        const auto fields = split(line, delimiter);
        if (width == 0) width = fields.size();
        if (fields.size() != width) {
            throw InvalidArgument(path + ": row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                                  " columns, expected " + std::to_string(width));
        }
        values.assign(width, 0.0);
        for (std::size_t c = 0; c < width; ++c) {
            const std::string& f = fields[c];
            const char* end = f.data() + f.size();
            const auto [ptr, ec] = std::from_chars(f.data(), end, values[c]);
            if (f.empty() || ec != std::errc() || ptr != end || !std::isfinite(values[c])) {
                throw InvalidArgument(path + ": non-numeric cell at row " + std::to_string(row) + ", column " +
                                      std::to_string(c + 1) + " ('" + f + "')");
            }
        }
        out.append_row(values);
    }
    if (out.rows() == 0) throw InvalidArgument("load_csv: '" + path + "' contains no data rows");
    return out;
}

void write_csv(const Matrix& points, const std::string& path, const std::vector<std::string>& header) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument("write_csv: cannot open '" + path + "' for writing");
    out.precision(17);
    for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
    if (!header.empty()) out << '\n';
    for (std::size_t i = 0; i < points.rows(); ++i) {
        for (std::size_t j = 0; j < points.cols(); ++j) out << (j ? "," : "") << points(i, j);
        out << '\n';
    }
    if (!out) throw InvalidArgument("write_csv: write failed for '" + path + "'");
}

}  // namespace bernflow
