// Fully connected networks with hand-written reverse mode and Adam.
//
// Batches are column-major: an input of width w with B samples is a w x B
// matrix. A network may take a second "side" input that is concatenated
// below the previous layer's output at one hidden layer; critics use this to
// inject the action after the first hidden layer. The injection point is
// implied by the layer shapes (the first layer whose in_width exceeds the
// previous out_width), so a list of LayerSpec fully describes a topology.
#pragma once

#include "mpqdpg/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

namespace mpqdpg::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation : std::uint32_t { linear = 0, relu = 1, tanh = 2 };

struct LayerSpec {
    int in_width = 0;
    int out_width = 0;
    Activation activation = Activation::linear;

    bool operator==(const LayerSpec&) const = default;
};

/// state -> hidden (relu) ... -> action (tanh)
std::vector<LayerSpec> actor_layers(int state_dim, std::span<const int> hidden, int action_dim);

/// state -> hidden[0] (relu) ; [h0, action] -> hidden[1] (relu) ... -> 1 (linear)
std::vector<LayerSpec> critic_layers(int state_dim, int action_dim, std::span<const int> hidden);

struct Layer {
    Matrix W;  // out x in
    Vector b;  // out
};

struct ForwardCache {
    std::vector<Matrix> inputs;   // per layer, after any side-input concatenation
    std::vector<Matrix> outputs;  // per layer, post-activation
};

struct ParamGrads {
    std::vector<Matrix> dW;
    std::vector<Vector> db;
};

struct InputGrads {
    Matrix primary;
    Matrix side;  // empty when the network has no side input
};

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

class MlpNetwork {
public:
    MlpNetwork() = default;

    /// Zero-initialized parameters. Throws ConfigError on inconsistent shapes.
    explicit MlpNetwork(std::vector<LayerSpec> specs, AdamConfig adam = {});

    /// Final layer ~ U[-final_range, final_range]; every other layer
    /// ~ U[-1/sqrt(fan_in), 1/sqrt(fan_in)]. Draw order: layer by layer,
    /// weights row-major then biases.
    static MlpNetwork init(std::vector<LayerSpec> specs, Rng& rng, AdamConfig adam = {},
                           double final_range = 3e-3);

    const std::vector<LayerSpec>& specs() const { return specs_; }
    std::size_t layer_count() const { return layers_.size(); }
    int input_width() const { return specs_.front().in_width; }
    int output_width() const { return specs_.back().out_width; }
    int side_width() const { return side_width_; }
    /// Index of the layer receiving the side input, or -1.
    int side_layer() const { return side_layer_; }

    Matrix forward(const Matrix& x, ForwardCache* cache = nullptr) const;
    Matrix forward(const Matrix& x, const Matrix& side, ForwardCache* cache = nullptr) const;

    /// Gradients of sum(output .* upstream) w.r.t. every weight and bias.
    ParamGrads backward_params(const ForwardCache& cache, const Matrix& upstream) const;

    /// Gradient of sum(output .* upstream) w.r.t. the inputs.
    InputGrads backward_input(const ForwardCache& cache, const Matrix& upstream) const;

    /// Both of the above in one reverse sweep; input grads skipped when null.
    ParamGrads backward(const ForwardCache& cache, const Matrix& upstream, InputGrads* input_grads) const;

    /// One Adam descent step. `l2` is added as l2 * W to weight gradients
    /// (biases are not decayed).
    void adam_step(const ParamGrads& grads, double l2 = 0.0);

    /// this <- tau * source + (1 - tau) * this, parameters only.
    void soft_update_from(const MlpNetwork& source, double tau);

    std::vector<Layer>& layers() { return layers_; }
    const std::vector<Layer>& layers() const { return layers_; }
    const AdamConfig& adam() const { return adam_; }
    void set_learning_rate(double lr) { adam_.learning_rate = lr; }
    std::int64_t adam_steps() const { return steps_; }
    std::size_t parameter_count() const;

private:
    Matrix forward_impl(const Matrix& x, const Matrix* side, ForwardCache* cache) const;
    ParamGrads zero_grads() const;

    std::vector<LayerSpec> specs_;
    std::vector<Layer> layers_;
    int side_layer_ = -1;
    int side_width_ = 0;

    AdamConfig adam_;
    std::int64_t steps_ = 0;
    std::vector<Layer> m_;
    std::vector<Layer> v_;
};

}  // namespace mpqdpg::nn
