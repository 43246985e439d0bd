#pragma once

// Training data in model-box units. Every Dataset keeps its points strictly
// inside the unit box (margin >= kSupportMargin) and records the affine map
// back to original units, so log-likelihoods can be reported there.

#include "bernflow/diffeo.hpp"
#include "bernflow/matrix.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace bernflow {

inline constexpr double kSupportMargin = 1e-6;
inline constexpr double kDefaultRescaleMargin = 0.02;

struct Dataset {
    Matrix points;                        // box units
    std::vector<Interval> support_box;    // unit box
    std::string provenance;
    TargetDiffeo rescale_diffeo = TargetDiffeo::identity(1);  // box -> original units

    std::size_t size() const noexcept { return points.rows(); }
    int dimension() const noexcept { return static_cast<int>(points.cols()); }
    Matrix original_points() const;
    void validate() const;
};

struct MixtureSpec1D {
    std::vector<double> means;
    std::vector<double> variances;
    std::vector<double> weights;  // non-negative; normalized on use

    void validate() const;
    std::vector<double> normalized_weights() const;

    static MixtureSpec1D five_gaussians();
    // Printed weights sum to 3; they are normalized like any other spec.
    static MixtureSpec1D seven_gaussians();
};

double mixture_pdf(const MixtureSpec1D& spec, double x);
// Raw draws in original units: component first, then a normal draw.
Matrix sample_mixture(const MixtureSpec1D& spec, std::size_t count, std::uint64_t seed);
Dataset gaussian_mixture_1d(const MixtureSpec1D& spec, std::size_t count, std::uint64_t seed,
                            double margin = kDefaultRescaleMargin);

// Stand-in 2-D toy distributions: moons, rings (radii in [1, 1.25] and
// [2, 2.25]), checkerboard (uniform marginals on [-2, 2]) and pinwheel.
Matrix toy2d_raw(std::string_view name, std::size_t count, std::uint64_t seed);
Dataset toy2d(std::string_view name, std::size_t count, std::uint64_t seed, double margin = kDefaultRescaleMargin);

// Per-dimension affine map of the unit box onto [lo', hi'] such that the
// observed range [min, max] lands on [margin, 1 - margin].
TargetDiffeo fit_rescale(const Matrix& points, double margin = kDefaultRescaleMargin);
Dataset rescale_to_box(const Matrix& points, double margin = kDefaultRescaleMargin, std::string provenance = "");
// Maps points with an existing rescale; points that land within
// kSupportMargin of the box boundary are an error.
Dataset apply_rescale(const Matrix& points, const TargetDiffeo& rescale, std::string provenance = "");

// Adds i.i.d. Uniform[0, magnitude] per coordinate in original units, then
// clamps into [kSupportMargin, 1 - kSupportMargin] in box units.
Dataset add_uniform_noise(const Dataset& ds, double magnitude, std::uint64_t seed);

// Numeric table, one point per row. Errors name the 1-based row and column.
Matrix load_csv(const std::string& path, bool has_header = false, char delimiter = ',');
void write_csv(const Matrix& points, const std::string& path, const std::vector<std::string>& header = {});

}  // namespace bernflow
