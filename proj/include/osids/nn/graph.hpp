#pragma once

#include <functional>
#include <string>
#include <vector>

#include "osids/nn/tensor.hpp"

namespace osids::nn {

// A learnable tensor plus its accumulated gradient.
struct Parameter {
    Tensor value;
    Tensor grad;
    std::string name;

    Parameter() = default;
    Parameter(std::string n, Tensor v)
        : value(std::move(v)), grad(Tensor::zeros(value.shape())), name(std::move(n)) {}

    void zero_grad() { grad.fill(0.0f); }
};

struct BatchNormState {
    Parameter gamma, beta;          // per channel
    Tensor running_mean, running_var;
    double momentum = 0.1;
    double epsilon = 1e-5;

    static BatchNormState init(const std::string& name, int channels);
};

// Reverse-mode tape. One Graph instance records one forward pass; backward()
// walks the tape in reverse and accumulates into the bound Parameter grads.
// Node gradients are reset on every backward() call, parameter gradients are
// not (call Parameter::zero_grad explicitly).
class Graph {
public:
    using Id = int;

    Id leaf(Tensor value);          // constant input, no gradient
    Id param(Parameter& p);         // differentiable leaf bound to p

    // x: [batch, ch_in, len], kernel: [ch_out, ch_in, k], bias: [ch_out]
    Id conv1d(Id x, Id kernel, Id bias, int stride);
    // x: [batch, ch, len] or [batch, ch]; updates running stats when training
    Id batch_norm(Id x, BatchNormState& bn, bool training);
    Id leaky_relu(Id x, double slope);
    Id sigmoid(Id x);
    Id softmax(Id x);               // rowwise over the last dim of [batch, n]
    // x: [batch, in], weight: [out, in], bias: [out]
    Id linear(Id x, Id weight, Id bias);

    Id reshape(Id x, std::vector<int> shape);
    Id concat_cols(Id a, Id b);     // [n, p] ++ [n, q] -> [n, p+q]
    Id slice_cols(Id x, int start, int len);

    Id add(Id a, Id b);
    Id add_scaled(Id a, Id b, double c); // a + c*b
    Id mul(Id a, Id b);             // elementwise
    Id sum(Id x);                   // scalar

    // z = mu + eps * exp(logvar / 2); gradients flow into mu and logvar only
    Id reparameterize(Id mu, Id logvar, Id eps);
    // batch mean of KL(N(mu, e^logvar) || N(0, I)) summed over latents
    Id gaussian_kl(Id mu, Id logvar);

    Id cross_entropy(Id logits, std::vector<int> targets); // scalar, mean over batch
    Id mse(Id a, Id b);                                    // scalar, mean over elements

    const Tensor& value(Id id) const { return node(id).value; }
    const Tensor& grad(Id id) const { return node(id).grad; }
    // Scalar nodes carry an exact double value alongside the float tensor.
    double scalar(Id id) const;

    void backward(Id loss); // throws BackwardBeforeForward if loss is not a recorded scalar

private:
    struct Node {
        Tensor value;
        Tensor grad;
        double scalar_value = 0.0;
        bool has_scalar = false;
        Parameter* bound = nullptr;
        std::function<void(Graph&)> back; // may be empty for leaves
    };

    Node& node(Id id) { return nodes_[static_cast<std::size_t>(id)]; }
    const Node& node(Id id) const { return nodes_[static_cast<std::size_t>(id)]; }
    Id push(Node n) {
        nodes_.push_back(std::move(n));
        return static_cast<Id>(nodes_.size() - 1);
    }
    void check(Id id) const;

    std::vector<Node> nodes_;
};

} // namespace osids::nn
