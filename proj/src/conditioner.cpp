#include "bernflow/conditioner.hpp"

#include "bernflow/errors.hpp"

#include <cmath>

namespace bernflow {

namespace {

// y = W x + b for row-major W (rows x cols).
void affine(const double* W, const double* b, std::span<const double> x, std::span<double> y) {
    const std::size_t cols = x.size();
    for (std::size_t r = 0; r < y.size(); ++r) {
        const double* w = W + r * cols;
        double acc = b[r];
        for (std::size_t c = 0; c < cols; ++c) acc += w[c] * x[c];
        y[r] = acc;
    }
}

// gW += g x^T, gb += g, gx += W^T g.
void affine_backward(const double* W, std::span<const double> x, std::span<const double> g, double* gW, double* gb,
                     std::span<double> gx) {
    const std::size_t cols = x.size();
    for (std::size_t r = 0; r < g.size(); ++r) {
        const double gr = g[r];
        gb[r] += gr;
        const double* w = W + r * cols;
        double* gw = gW + r * cols;
        for (std::size_t c = 0; c < cols; ++c) {
            gw[c] += gr * x[c];
            gx[c] += w[c] * gr;
        }
    }
}

}  // namespace

ConditionerNet::ConditionerNet(int input, int hidden1, int hidden2, int output)
    : in_(input), h1_(hidden1), h2_(hidden2), out_(output) {
    if (input < 1 || hidden1 < 1 || hidden2 < 1 || output < 0) {
        throw InvalidArgument("ConditionerNet: layer sizes must be positive");
    }
    params_.assign(static_cast<std::size_t>(h1_) * (in_ + 1) + static_cast<std::size_t>(h2_) * (h1_ + 1) +
                       static_cast<std::size_t>(out_) * (h2_ + 1),
                   0.0);
}

ConditionerNet ConditionerNet::random(int input, int hidden1, int hidden2, int output, std::mt19937_64& rng,
                                      double scale) {
    ConditionerNet net(input, hidden1, hidden2, output);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& p : net.params_) p = scale * normal(rng);
    return net;
}

std::vector<double> ConditionerNet::forward(std::span<const double> prefix, Cache* cache) const {
    if (prefix.size() != static_cast<std::size_t>(in_)) {
        throw InvalidArgument("ConditionerNet: expected input width " + std::to_string(in_) + ", got " +
                              std::to_string(prefix.size()));
    }
    const double* W1 = params_.data();
    const double* b1 = W1 + h1_ * in_;
    const double* W2 = b1 + h1_;
    const double* b2 = W2 + h2_ * h1_;
    const double* W3 = b2 + h2_;
    const double* b3 = W3 + out_ * h2_;

    std::vector<double> a1(h1_), a2(h2_), out(out_);
    affine(W1, b1, prefix, a1);
    for (double& v : a1) v = std::tanh(v);
    affine(W2, b2, a1, a2);
    for (double& v : a2) v = std::tanh(v);
    affine(W3, b3, a2, out);
    if (cache) {
        cache->input.assign(prefix.begin(), prefix.end());
        cache->hidden1 = std::move(a1);
        cache->hidden2 = std::move(a2);
    }
    return out;
}

void ConditionerNet::backward(const Cache& cache, std::span<const double> out_grad, std::span<double> param_grad,
                              std::span<double> input_grad) const {
    if (out_grad.size() != static_cast<std::size_t>(out_) || param_grad.size() != params_.size() ||
        input_grad.size() != static_cast<std::size_t>(in_)) {
        throw InvalidArgument("ConditionerNet::backward: shape mismatch");
    }
    const double* W1 = params_.data();
    const double* W2 = W1 + h1_ * in_ + h1_;
    const double* W3 = W2 + h2_ * h1_ + h2_;
    double* gW1 = param_grad.data();
    double* gb1 = gW1 + h1_ * in_;
    double* gW2 = gb1 + h1_;
    double* gb2 = gW2 + h2_ * h1_;
    double* gW3 = gb2 + h2_;
    double* gb3 = gW3 + out_ * h2_;

    std::vector<double> g2(h2_, 0.0), g1(h1_, 0.0);
    affine_backward(W3, cache.hidden2, out_grad, gW3, gb3, g2);
    for (int i = 0; i < h2_; ++i) g2[i] *= 1.0 - cache.hidden2[i] * cache.hidden2[i];
    affine_backward(W2, cache.hidden1, g2, gW2, gb2, g1);
    for (int i = 0; i < h1_; ++i) g1[i] *= 1.0 - cache.hidden1[i] * cache.hidden1[i];
    affine_backward(W1, cache.input, g1, gW1, gb1, input_grad);
}

nlohmann::json ConditionerNet::to_json() const {
    const std::size_t rows[3] = {std::size_t(h1_), std::size_t(h2_), std::size_t(out_)};
    const std::size_t cols[3] = {std::size_t(in_), std::size_t(h1_), std::size_t(h2_)};
    nlohmann::json weights = nlohmann::json::array();
    nlohmann::json biases = nlohmann::json::array();
    auto it = params_.begin();
    for (int layer = 0; layer < 3; ++layer) {
        const auto nw = static_cast<std::ptrdiff_t>(rows[layer] * cols[layer]);
        weights.push_back(std::vector<double>(it, it + nw));
        it += nw;
        biases.push_back(std::vector<double>(it, it + static_cast<std::ptrdiff_t>(rows[layer])));
        it += static_cast<std::ptrdiff_t>(rows[layer]);
    }
    return {{"sizes", {in_, h1_, h2_, out_}}, {"weights", weights}, {"biases", biases}};
}

ConditionerNet ConditionerNet::from_json(const nlohmann::json& j) {
    const auto sizes = j.at("sizes").get<std::vector<int>>();
    if (sizes.size() != 4) throw InvalidArgument("ConditionerNet JSON: sizes must have four entries");
    ConditionerNet net(sizes[0], sizes[1], sizes[2], sizes[3]);
    const auto& weights = j.at("weights");
    const auto& biases = j.at("biases");
    if (weights.size() != 3 || biases.size() != 3) {
        throw InvalidArgument("ConditionerNet JSON: expected three weight and bias blocks");
    }
    std::vector<double> params;
    params.reserve(net.params_.size());
    for (int layer = 0; layer < 3; ++layer) {
        const auto w = weights[layer].get<std::vector<double>>();
        const auto b = biases[layer].get<std::vector<double>>();
        params.insert(params.end(), w.begin(), w.end());
        params.insert(params.end(), b.begin(), b.end());
    }
    if (params.size() != net.params_.size()) throw InvalidArgument("ConditionerNet JSON: parameter count mismatch");
    net.params_ = std::move(params);
    return net;
}

std::vector<double> conditioner_forward(const ConditionerNet& net, std::span<const double> prefix,
                                        ConditionerNet::Cache* cache) {
    return net.forward(prefix, cache);
}

}  // namespace bernflow
