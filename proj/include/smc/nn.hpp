#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "smc/errors.hpp"
#include "smc/rng.hpp"

namespace smc::nn {

enum class Activation : std::uint8_t {
    affine = 0,
    relu = 1,
    tanh = 2,
    sigmoid = 3,
    softmax = 4,
};

enum class Loss {
    mse,
    cross_entropy,
};

const char* activation_name(Activation a);

// All layer activations of one forward pass. activations[0] is the input,
// activations[i+1] the post-activation output of layer i; pre[i] holds the
// affine sums of layer i (needed for exact backward passes).
struct ActivationTrace {
    std::vector<std::vector<double>> activations;
    std::vector<std::vector<double>> pre;

    const std::vector<double>& output() const { return activations.back(); }
};

// Per-parameter tensors mirroring a DenseNet's shape.
struct Gradients {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;
};

// Minimal dense feedforward network. Weights of layer i have shape
// out_i x in_i (row-major); networks are treated as immutable values once
// built, so training steps return fresh copies.
class DenseNet {
public:
    // layer_sizes = {in, h1, ..., out}; one activation per layer.
    DenseNet(std::vector<std::size_t> layer_sizes, std::vector<Activation> activations);

    // Uniform init in +-sqrt(6 / (fan_in + fan_out)).
    static DenseNet random(std::vector<std::size_t> layer_sizes,
                           std::vector<Activation> activations, Rng& rng);

    std::size_t layer_count() const { return acts_.size(); }
    std::size_t input_size() const { return sizes_.front(); }
    std::size_t output_size() const { return sizes_.back(); }
    const std::vector<std::size_t>& layer_sizes() const { return sizes_; }
    std::size_t layer_in(std::size_t layer) const { return sizes_[layer]; }
    std::size_t layer_out(std::size_t layer) const { return sizes_[layer + 1]; }
    Activation activation(std::size_t layer) const { return acts_[layer]; }
    const std::vector<Activation>& activations() const { return acts_; }

    const std::vector<double>& weights(std::size_t layer) const { return w_[layer]; }
    const std::vector<double>& biases(std::size_t layer) const { return b_[layer]; }
    std::vector<double>& mutable_weights(std::size_t layer) { return w_[layer]; }
    std::vector<double>& mutable_biases(std::size_t layer) { return b_[layer]; }

    // Freeze granularity is per parameter tensor (layer weight / layer bias).
    bool weights_frozen(std::size_t layer) const { return freeze_w_[layer]; }
    bool biases_frozen(std::size_t layer) const { return freeze_b_[layer]; }
    void set_weights_frozen(std::size_t layer, bool frozen) { freeze_w_[layer] = frozen; }
    void set_biases_frozen(std::size_t layer, bool frozen) { freeze_b_[layer] = frozen; }
    void set_layer_frozen(std::size_t layer, bool frozen);
    void set_all_frozen(bool frozen);
    bool any_frozen() const;

    std::size_t parameter_count() const;

    ActivationTrace forward(std::span<const double> input) const;
    // Convenience: forward without keeping the trace.
    std::vector<double> evaluate(std::span<const double> input) const;

    std::vector<std::uint8_t> serialize() const;
    static DenseNet deserialize(std::span<const std::uint8_t> bytes);
    std::size_t serialized_size() const;

    // Exact (bitwise) parameter equality.
    bool parameters_equal(const DenseNet& other) const;
    bool same_spec(const DenseNet& other) const;

private:
    std::vector<std::size_t> sizes_;
    std::vector<Activation> acts_;
    std::vector<std::vector<double>> w_;
    std::vector<std::vector<double>> b_;
    std::vector<bool> freeze_w_;
    std::vector<bool> freeze_b_;
};

// Serialization format ("SMNN"): magic 4 bytes, version u16, layer count u16,
// per layer {in u32, out u32, activation u8}, then parameters as little-endian
// 64-bit floats in layer order, weights row-major then bias.
inline constexpr std::size_t kSerialVersion = 1;
inline constexpr std::size_t kHeaderBaseBytes = 8;
inline constexpr std::size_t kHeaderBytesPerLayer = 9;

struct BackwardResult {
    double loss = 0.0;
    Gradients grads;
};

// Exact analytic gradients of the scalar loss with respect to every
// parameter. Frozen tensors still receive gradient values; only sgd_step
// honors the freeze mask. cross_entropy requires a softmax output layer.
BackwardResult backward(const DenseNet& net, const ActivationTrace& trace, Loss loss,
                        std::span<const double> target);

// Backward pass seeded with dLoss/d(post-activation output); used when the
// loss lives outside the network (policy gradients, split training).
Gradients backward_from_output(const DenseNet& net, const ActivationTrace& trace,
                               std::span<const double> output_grad);

// Backward pass seeded with dLoss/d(output pre-activation); skips the output
// activation derivative (fused softmax-style seeds).
Gradients backward_from_logits(const DenseNet& net, const ActivationTrace& trace,
                               std::span<const double> logit_grad);

// Gradient of the forward pass with respect to the *input* vector.
std::vector<double> input_gradient(const DenseNet& net, const ActivationTrace& trace,
                                   std::span<const double> output_grad);

// backward_from_logits that also reports the input gradient.
Gradients backward_from_logits_with_input(const DenseNet& net, const ActivationTrace& trace,
                                          std::span<const double> logit_grad,
                                          std::vector<double>& input_grad);

// backward_from_output that also reports the input gradient.
Gradients backward_from_output_with_input(const DenseNet& net, const ActivationTrace& trace,
                                          std::span<const double> output_grad,
                                          std::vector<double>& input_grad);

// Unfrozen parameters move by -lr * grad; frozen tensors are bit-identical.
// Throws DivergenceError on non-finite gradients.
DenseNet sgd_step(const DenseNet& net, const Gradients& grads, double lr);

void accumulate(Gradients& into, const Gradients& grads);
void scale(Gradients& grads, double factor);
Gradients zero_gradients(const DenseNet& net);

double mse(std::span<const double> a, std::span<const double> b);

}  // namespace smc::nn
