#include "mpqdpg/neural.hpp"

#include "mpqdpg/errors.hpp"

#include <cmath>
#include <string>

namespace mpqdpg::nn {

namespace {

void apply_activation(Matrix& z, Activation act) {
    switch (act) {
        case Activation::linear:
            break;
        case Activation::relu:
            z = z.cwiseMax(0.0);
            break;
        case Activation::tanh:
            z = z.array().tanh().matrix();
            break;
    }
}

// Multiplies `grad` in place by the activation derivative, expressed through
// the cached post-activation output. relu'(0) = 0.
void scale_by_derivative(Matrix& grad, const Matrix& out, Activation act) {
    switch (act) {
        case Activation::linear:
            break;
        case Activation::relu:
            grad = (out.array() > 0.0).select(grad, 0.0);
            break;
        case Activation::tanh:
            grad.array() *= 1.0 - out.array().square();
            break;
    }
}

Layer zero_layer(const LayerSpec& s) { return {Matrix::Zero(s.out_width, s.in_width), Vector::Zero(s.out_width)}; }

}  // namespace

std::vector<LayerSpec> actor_layers(int state_dim, std::span<const int> hidden, int action_dim) {
    std::vector<LayerSpec> specs;
    int in = state_dim;
    for (int h : hidden) {
        specs.push_back({in, h, Activation::relu});
        in = h;
    }
    specs.push_back({in, action_dim, Activation::tanh});
    return specs;
}

std::vector<LayerSpec> critic_layers(int state_dim, int action_dim, std::span<const int> hidden) {
    if (hidden.empty()) throw ConfigError("critic needs at least one hidden layer");
    std::vector<LayerSpec> specs;
    int in = state_dim;
    for (std::size_t i = 0; i < hidden.size(); ++i) {
        specs.push_back({in + (i == 1 ? action_dim : 0), hidden[i], Activation::relu});
        in = hidden[i];
    }
    specs.push_back({in + (hidden.size() == 1 ? action_dim : 0), 1, Activation::linear});
    return specs;
}

MlpNetwork::MlpNetwork(std::vector<LayerSpec> specs, AdamConfig adam) : specs_(std::move(specs)), adam_(adam) {
    if (specs_.empty()) throw ConfigError("network needs at least one layer");
    for (std::size_t i = 0; i < specs_.size(); ++i) {
        const LayerSpec& s = specs_[i];
        if (s.in_width <= 0 || s.out_width <= 0) {
            throw ConfigError("layer " + std::to_string(i) + " has non-positive width");
        }
        if (i == 0) continue;
        const int extra = s.in_width - specs_[i - 1].out_width;
        if (extra == 0) continue;
        if (extra < 0 || side_layer_ >= 0) {
            throw ConfigError("layer " + std::to_string(i) + " input width does not chain from layer " +
                              std::to_string(i - 1));
        }
        side_layer_ = static_cast<int>(i);
        side_width_ = extra;
    }
    for (const LayerSpec& s : specs_) {
        layers_.push_back(zero_layer(s));
        m_.push_back(zero_layer(s));
        v_.push_back(zero_layer(s));
    }
}

MlpNetwork MlpNetwork::init(std::vector<LayerSpec> specs, Rng& rng, AdamConfig adam, double final_range) {
    MlpNetwork net(std::move(specs), adam);
    for (std::size_t i = 0; i < net.layers_.size(); ++i) {
        const bool last = i + 1 == net.layers_.size();
        const double bound = last ? final_range : 1.0 / std::sqrt(static_cast<double>(net.specs_[i].in_width));
        Layer& layer = net.layers_[i];
        for (Eigen::Index r = 0; r < layer.W.rows(); ++r) {
            for (Eigen::Index c = 0; c < layer.W.cols(); ++c) layer.W(r, c) = uniform(rng, -bound, bound);
        }
        for (Eigen::Index r = 0; r < layer.b.size(); ++r) layer.b(r) = uniform(rng, -bound, bound);
    }
    return net;
}

std::size_t MlpNetwork::parameter_count() const {
    std::size_t n = 0;
    for (const Layer& l : layers_) n += static_cast<std::size_t>(l.W.size() + l.b.size());
    return n;
}

Matrix MlpNetwork::forward(const Matrix& x, ForwardCache* cache) const { return forward_impl(x, nullptr, cache); }

Matrix MlpNetwork::forward(const Matrix& x, const Matrix& side, ForwardCache* cache) const {
    return forward_impl(x, &side, cache);
}

Matrix MlpNetwork::forward_impl(const Matrix& x, const Matrix* side, ForwardCache* cache) const {
    if (x.rows() != input_width()) {
        throw ConfigError("network input width " + std::to_string(x.rows()) + " != expected " +
                          std::to_string(input_width()));
    }
    if ((side != nullptr) != (side_layer_ >= 0)) {
        throw ConfigError(side_layer_ >= 0 ? "network requires a side input" : "network takes no side input");
    }
    if (side != nullptr && (side->rows() != side_width_ || side->cols() != x.cols())) {
        throw ConfigError("side input shape mismatch");
    }
    if (cache != nullptr) {
        cache->inputs.resize(layers_.size());
        cache->outputs.resize(layers_.size());
    }

    Matrix h = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        if (static_cast<int>(i) == side_layer_) {
            Matrix joined(h.rows() + side->rows(), h.cols());
            joined << h, *side;
            h = std::move(joined);
        }
        Matrix z = layers_[i].W * h;
        z.colwise() += layers_[i].b;
        apply_activation(z, specs_[i].activation);
        if (cache != nullptr) {
            cache->inputs[i] = std::move(h);
            cache->outputs[i] = z;
        }
        h = std::move(z);
    }
    return h;
}

ParamGrads MlpNetwork::zero_grads() const {
    ParamGrads g;
    for (const LayerSpec& s : specs_) {
        g.dW.push_back(Matrix::Zero(s.out_width, s.in_width));
        g.db.push_back(Vector::Zero(s.out_width));
    }
    return g;
}

ParamGrads MlpNetwork::backward(const ForwardCache& cache, const Matrix& upstream, InputGrads* input_grads) const {
    if (cache.outputs.size() != layers_.size()) throw ConfigError("forward cache does not match network");
    const Matrix& top = cache.outputs.back();
    if (upstream.rows() != top.rows() || upstream.cols() != top.cols()) {
        throw ConfigError("upstream gradient shape mismatch");
    }

    ParamGrads grads = zero_grads();
    Matrix delta = upstream;
    for (std::size_t idx = layers_.size(); idx-- > 0;) {
        scale_by_derivative(delta, cache.outputs[idx], specs_[idx].activation);
        grads.dW[idx].noalias() = delta * cache.inputs[idx].transpose();
        grads.db[idx] = delta.rowwise().sum();
        if (idx == 0 && input_grads == nullptr) break;

        Matrix dx = layers_[idx].W.transpose() * delta;
        if (static_cast<int>(idx) == side_layer_) {
            const Eigen::Index keep = dx.rows() - side_width_;
            if (input_grads != nullptr) input_grads->side = dx.bottomRows(side_width_);
            dx = Matrix(dx.topRows(keep));
        }
        if (idx == 0) {
            input_grads->primary = std::move(dx);
            break;
        }
        delta = std::move(dx);
    }
    return grads;
}

ParamGrads MlpNetwork::backward_params(const ForwardCache& cache, const Matrix& upstream) const {
    return backward(cache, upstream, nullptr);
}

InputGrads MlpNetwork::backward_input(const ForwardCache& cache, const Matrix& upstream) const {
    InputGrads g;
    backward(cache, upstream, &g);
    return g;
}

void MlpNetwork::adam_step(const ParamGrads& grads, double l2) {
    if (grads.dW.size() != layers_.size() || grads.db.size() != layers_.size()) {
        throw ConfigError("gradient layer count mismatch");
    }
    ++steps_;
    const double b1 = adam_.beta1;
    const double b2 = adam_.beta2;
    const double correct1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
    const double correct2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
    const double lr = adam_.learning_rate;
    const double eps = adam_.epsilon;

    auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
        param.array() -= lr * (m.array() / correct1) / ((v.array() / correct2).sqrt() + eps);
    };

    for (std::size_t i = 0; i < layers_.size(); ++i) {
        if (grads.dW[i].rows() != layers_[i].W.rows() || grads.dW[i].cols() != layers_[i].W.cols() ||
            grads.db[i].size() != layers_[i].b.size()) {
            throw ConfigError("gradient shape mismatch at layer " + std::to_string(i));
        }
        if (l2 != 0.0) {
            const Matrix g = grads.dW[i] + l2 * layers_[i].W;
            update(layers_[i].W, m_[i].W, v_[i].W, g);
        } else {
            update(layers_[i].W, m_[i].W, v_[i].W, grads.dW[i]);
        }
        update(layers_[i].b, m_[i].b, v_[i].b, grads.db[i]);
    }
}

void MlpNetwork::soft_update_from(const MlpNetwork& source, double tau) {
    if (source.specs_ != specs_) throw ConfigError("soft update between different topologies");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        layers_[i].W = tau * source.layers_[i].W + (1.0 - tau) * layers_[i].W;
        layers_[i].b = tau * source.layers_[i].b + (1.0 - tau) * layers_[i].b;
    }
}

}  // namespace mpqdpg::nn
