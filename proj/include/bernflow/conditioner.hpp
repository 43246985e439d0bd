#pragma once

// Fully-connected conditioner: z_{<j} -> raw monotone parameters of the
// coupling for dimension j. Three weight layers with tanh hidden units.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <json.hpp>

namespace bernflow {

class ConditionerNet {
public:
    struct Cache {
        std::vector<double> input;
        std::vector<double> hidden1;  // post-activation
        std::vector<double> hidden2;
    };

    ConditionerNet(int input, int hidden1, int hidden2, int output);

    // Weights and biases drawn from N(0, scale^2).
    static ConditionerNet random(int input, int hidden1, int hidden2, int output, std::mt19937_64& rng,
                                 double scale = 1.0);

    int input_size() const noexcept { return in_; }
    int hidden1_size() const noexcept { return h1_; }
    int hidden2_size() const noexcept { return h2_; }
    int output_size() const noexcept { return out_; }
    std::size_t parameter_count() const noexcept { return params_.size(); }

    // Layout: W1 (h1 x in), b1, W2 (h2 x h1), b2, W3 (out x h2), b3.
    std::span<double> parameters() noexcept { return params_; }
    std::span<const double> parameters() const noexcept { return params_; }

    std::vector<double> forward(std::span<const double> prefix, Cache* cache = nullptr) const;

    // Reverse replay: param_grad += d out / d params^T out_grad and
    // input_grad += d out / d input^T out_grad.
    void backward(const Cache& cache, std::span<const double> out_grad, std::span<double> param_grad,
                  std::span<double> input_grad) const;

    nlohmann::json to_json() const;
    static ConditionerNet from_json(const nlohmann::json& j);

    bool operator==(const ConditionerNet&) const = default;

private:
    int in_, h1_, h2_, out_;
    std::vector<double> params_;
};

std::vector<double> conditioner_forward(const ConditionerNet& net, std::span<const double> prefix,
                                        ConditionerNet::Cache* cache = nullptr);

}  // namespace bernflow
