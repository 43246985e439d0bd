#pragma once

// Base densities on the unit cube, i.i.d. across dimensions.

#include "bernflow/matrix.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include <json.hpp>

namespace bernflow {

enum class PriorKind { Kumaraswamy, UniformUnit, SquashedNormal };

struct PriorSpec {
    PriorKind kind = PriorKind::Kumaraswamy;
    double a = 2.0;  // Kumaraswamy shape parameters
    double b = 5.0;
    int dimension = 1;

    void validate() const;

    static PriorSpec kumaraswamy(double a, double b, int dimension);
    static PriorSpec uniform(int dimension);
    static PriorSpec squashed_normal(int dimension);
};

std::string_view to_string(PriorKind kind);
PriorKind prior_kind_from_string(std::string_view name);

double kumaraswamy_cdf(double a, double b, double x);
double kumaraswamy_inverse_cdf(double a, double b, double u);

Matrix prior_sample(const PriorSpec& spec, std::size_t count, std::uint64_t seed);

// Points on or outside the boundary of (0,1)^d have log-density -inf.
double prior_log_density(const PriorSpec& spec, std::span<const double> z);

// d/dz of the log-density, written into `grad`. Only valid strictly inside.
void prior_log_density_gradient(const PriorSpec& spec, std::span<const double> z, std::span<double> grad);

nlohmann::json to_json(const PriorSpec& spec);
PriorSpec prior_from_json(const nlohmann::json& j);

}  // namespace bernflow
