#pragma once

// Autoregressive flow built from strictly increasing Bernstein couplings.
//
// Layer i maps u^{i-1} -> u^i with u^i_j = B_j(u^{i-1}_j), where the
// coefficients of B_j come from free parameters (first processed dimension)
// or from a conditioner net fed the already-processed inputs u^{i-1}_{<j}.
// Every layer input lives in [0,1]^d; the final layer's output box is the
// model box and a TargetDiffeo maps it onto the data region.
//
// Conditioning on the layer *input* means inversion is sequential: B_2's
// coefficients are only known once u_1 has been recovered.

#include "bernflow/conditioner.hpp"
#include "bernflow/diffeo.hpp"
#include "bernflow/matrix.hpp"
#include "bernflow/monotone.hpp"
#include "bernflow/prior.hpp"
#include "bernflow/rootfind.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace bernflow {

struct Coupling {
    std::vector<double> free_raw;        // used when net is empty
    std::optional<ConditionerNet> net;

    bool is_free() const noexcept { return !net.has_value(); }
};

struct FlowLayer {
    int degree = 10;
    Scheme scheme = Scheme::CumulativePositive;
    bool reversed = false;              // process dimensions d-1, ..., 0
    std::vector<Interval> out_range;    // per data dimension
    std::vector<Coupling> couplings;    // per processing position

    int dimension() const noexcept { return static_cast<int>(couplings.size()); }
    int dim_at(int position) const noexcept { return reversed ? dimension() - 1 - position : position; }
};

struct FlowModel {
    PriorSpec prior;
    std::vector<FlowLayer> layers;
    TargetDiffeo diffeo = TargetDiffeo::identity(1);

    int dimension() const noexcept { return prior.dimension; }
    void validate() const;
};

struct FlowSpec {
    int dimension = 1;
    int layers = 1;
    int degree = 10;
    int hidden1 = 32;
    int hidden2 = 32;
    PriorSpec prior = PriorSpec::kumaraswamy(2.0, 5.0, 1);
    std::optional<TargetDiffeo> diffeo;   // identity when empty
    std::vector<Interval> target_box;     // final layer output; unit box when empty
    Scheme scheme = Scheme::CumulativePositive;
    bool alternate_reverse = false;
    double init_scale = 1.0;              // parameters ~ N(0, init_scale^2)
    bool identity_init = false;           // all parameters zero: equally spaced coefficients
};

FlowModel make_flow(const FlowSpec& spec, std::uint64_t seed);

// Coefficients of the coupling at processing position k given the prefix
// of already-processed layer inputs.
std::vector<double> coupling_coefficients(const FlowLayer& layer, int position, std::span<const double> prefix,
                                          ConditionerNet::Cache* cache = nullptr);

struct LayerResult {
    std::vector<double> point;
    double logdet;  // log|det d(out)/d(in)| of the layer, in both directions
};

LayerResult layer_forward(const FlowLayer& layer, std::span<const double> z);
LayerResult layer_inverse(const FlowLayer& layer, std::span<const double> x, const RootConfig& cfg = {});

struct MapResult {
    std::vector<double> point;
    double logdet;  // log-det of the map that was applied
};

// Layers then h; logdet includes log|J_h|.
MapResult forward(const FlowModel& model, std::span<const double> z);
// h^{-1} then layers in reverse; logdet is the inverse map's, i.e. the
// negative of forward's at the recovered point.
MapResult inverse(const FlowModel& model, std::span<const double> x, const RootConfig& cfg = {});

// Points outside the model's support yield -inf.
double log_density(const FlowModel& model, std::span<const double> x, const RootConfig& cfg = {});
std::vector<double> log_density(const FlowModel& model, const Matrix& points, const RootConfig& cfg = {});

Matrix sample(const FlowModel& model, std::size_t count, std::uint64_t seed);

// Flat parameter vector: layers in order, couplings in processing order,
// free raw values or net parameters.
enum class ParamGroup { FreeCoefficients, NetWeights };

std::size_t parameter_count(const FlowModel& model);
std::vector<double> get_parameters(const FlowModel& model);
void set_parameters(FlowModel& model, std::span<const double> params);
std::vector<ParamGroup> parameter_groups(const FlowModel& model);

nlohmann::json to_json(const FlowModel& model);
FlowModel flow_from_json(const nlohmann::json& j);
void save_checkpoint(const FlowModel& model, const std::string& path);
FlowModel load_checkpoint(const std::string& path);

}  // namespace bernflow
