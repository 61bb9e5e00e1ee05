#include "smc/nn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

namespace smc::nn {

namespace {

void check_sizes(const std::vector<std::size_t>& sizes, const std::vector<Activation>& acts) {
    if (sizes.size() < 2)
        throw ConfigError("DenseNet: need at least one layer (two size entries)");
    if (acts.size() != sizes.size() - 1)
        throw ConfigError("DenseNet: activation count must equal layer count");
    for (std::size_t s : sizes)
        if (s == 0) throw ConfigError("DenseNet: layer sizes must be positive");
}

void apply_activation(Activation act, const std::vector<double>& pre, std::vector<double>& out) {
    const std::size_t n = pre.size();
    out.resize(n);
    switch (act) {
        case Activation::affine:
            out = pre;
            break;
        case Activation::relu:
            for (std::size_t i = 0; i < n; ++i) out[i] = pre[i] > 0.0 ? pre[i] : 0.0;
            break;
        case Activation::tanh:
            for (std::size_t i = 0; i < n; ++i) out[i] = std::tanh(pre[i]);
            break;
        case Activation::sigmoid:
            for (std::size_t i = 0; i < n; ++i) out[i] = 1.0 / (1.0 + std::exp(-pre[i]));
            break;
        case Activation::softmax: {
            double m = pre[0];
            for (double v : pre) m = std::max(m, v);
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                out[i] = std::exp(pre[i] - m);
                total += out[i];
            }
            for (std::size_t i = 0; i < n; ++i) out[i] /= total;
            break;
        }
    }
}

// delta <- dL/dpre given dL/dpost, the layer's pre/post values.
void activation_backward(Activation act, const std::vector<double>& pre,
                         const std::vector<double>& post, const std::vector<double>& post_grad,
                         std::vector<double>& delta) {
    const std::size_t n = pre.size();
    delta.resize(n);
    switch (act) {
        case Activation::affine:
            delta = post_grad;
            break;
        case Activation::relu:
            for (std::size_t i = 0; i < n; ++i) delta[i] = pre[i] > 0.0 ? post_grad[i] : 0.0;
            break;
        case Activation::tanh:
            for (std::size_t i = 0; i < n; ++i) delta[i] = post_grad[i] * (1.0 - post[i] * post[i]);
            break;
        case Activation::sigmoid:
            for (std::size_t i = 0; i < n; ++i) delta[i] = post_grad[i] * post[i] * (1.0 - post[i]);
            break;
        case Activation::softmax: {
            // Jacobian-vector product: delta_i = p_i * (g_i - sum_k g_k p_k).
            double dot = 0.0;
            for (std::size_t i = 0; i < n; ++i) dot += post_grad[i] * post[i];
            for (std::size_t i = 0; i < n; ++i) delta[i] = post[i] * (post_grad[i] - dot);
            break;
        }
    }
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>((bits >> (8 * i)) & 0xff));
}

struct ByteReader {
    std::span<const std::uint8_t> bytes;
    std::size_t pos = 0;

    void need(std::size_t n, const char* field) {
        if (pos + n > bytes.size())
            throw SmcParseError(std::string("SMNN parse error: truncated ") + field +
                                " at offset " + std::to_string(pos));
    }
    std::uint8_t u8(const char* field) {
        need(1, field);
        return bytes[pos++];
    }
    std::uint16_t u16(const char* field) {
        need(2, field);
        std::uint16_t v = static_cast<std::uint16_t>(bytes[pos]) |
                          static_cast<std::uint16_t>(bytes[pos + 1]) << 8;
        pos += 2;
        return v;
    }
    std::uint32_t u32(const char* field) {
        need(4, field);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    double f64(const char* field) {
        need(8, field);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[pos + i]) << (8 * i);
        pos += 8;
        return std::bit_cast<double>(v);
    }
};

Gradients backward_core(const DenseNet& net, const ActivationTrace& trace,
                        std::vector<double> delta, std::vector<double>* input_grad_out) {
    const std::size_t layers = net.layer_count();
    Gradients grads = zero_gradients(net);
    for (std::size_t l = layers; l-- > 0;) {
        const auto& in_act = trace.activations[l];
        const std::size_t out_n = net.layer_out(l);
        const std::size_t in_n = net.layer_in(l);
        auto& gw = grads.weights[l];
        auto& gb = grads.biases[l];
        for (std::size_t r = 0; r < out_n; ++r) {
            gb[r] = delta[r];
            const double d = delta[r];
            for (std::size_t c = 0; c < in_n; ++c) gw[r * in_n + c] = d * in_act[c];
        }
        if (l == 0 && input_grad_out == nullptr) break;
        // Propagate: prev_post_grad = W^T delta, then through activation l-1.
        std::vector<double> prev_post_grad(in_n, 0.0);
        const auto& w = net.weights(l);
        for (std::size_t r = 0; r < out_n; ++r) {
            const double d = delta[r];
            for (std::size_t c = 0; c < in_n; ++c) prev_post_grad[c] += w[r * in_n + c] * d;
        }
        if (l == 0) {
            *input_grad_out = std::move(prev_post_grad);
            break;
        }
        activation_backward(net.activation(l - 1), trace.pre[l - 1], trace.activations[l],
                            prev_post_grad, delta);
    }
    return grads;
}

}  // namespace

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::affine: return "affine";
        case Activation::relu: return "relu";
        case Activation::tanh: return "tanh";
        case Activation::sigmoid: return "sigmoid";
        case Activation::softmax: return "softmax";
    }
    return "unknown";
}

DenseNet::DenseNet(std::vector<std::size_t> layer_sizes, std::vector<Activation> activations)
    : sizes_(std::move(layer_sizes)), acts_(std::move(activations)) {
    check_sizes(sizes_, acts_);
    const std::size_t layers = acts_.size();
    w_.resize(layers);
    b_.resize(layers);
    for (std::size_t l = 0; l < layers; ++l) {
        w_[l].assign(sizes_[l + 1] * sizes_[l], 0.0);
        b_[l].assign(sizes_[l + 1], 0.0);
    }
    freeze_w_.assign(layers, false);
    freeze_b_.assign(layers, false);
}

DenseNet DenseNet::random(std::vector<std::size_t> layer_sizes,
                          std::vector<Activation> activations, Rng& rng) {
    DenseNet net(std::move(layer_sizes), std::move(activations));
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        const double bound =
            std::sqrt(6.0 / static_cast<double>(net.layer_in(l) + net.layer_out(l)));
        for (double& v : net.w_[l]) v = rng.uniform(-bound, bound);
        for (double& v : net.b_[l]) v = rng.uniform(-bound, bound);
    }
    return net;
}

void DenseNet::set_layer_frozen(std::size_t layer, bool frozen) {
    freeze_w_[layer] = frozen;
    freeze_b_[layer] = frozen;
}

void DenseNet::set_all_frozen(bool frozen) {
    for (std::size_t l = 0; l < layer_count(); ++l) set_layer_frozen(l, frozen);
}

bool DenseNet::any_frozen() const {
    for (std::size_t l = 0; l < layer_count(); ++l)
        if (freeze_w_[l] || freeze_b_[l]) return true;
    return false;
}

std::size_t DenseNet::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < layer_count(); ++l) n += w_[l].size() + b_[l].size();
    return n;
}

ActivationTrace DenseNet::forward(std::span<const double> input) const {
    if (input.size() != input_size())
        throw DimensionError("forward: input length " + std::to_string(input.size()) +
                             " != expected " + std::to_string(input_size()));
    ActivationTrace trace;
    trace.activations.reserve(layer_count() + 1);
    trace.pre.reserve(layer_count());
    trace.activations.emplace_back(input.begin(), input.end());
    for (std::size_t l = 0; l < layer_count(); ++l) {
        const auto& in = trace.activations.back();
        const std::size_t out_n = layer_out(l);
        const std::size_t in_n = layer_in(l);
        std::vector<double> pre(out_n);
        const auto& w = w_[l];
        for (std::size_t r = 0; r < out_n; ++r) {
            double sum = b_[l][r];
            for (std::size_t c = 0; c < in_n; ++c) sum += w[r * in_n + c] * in[c];
            pre[r] = sum;
        }
        std::vector<double> post;
        apply_activation(acts_[l], pre, post);
        trace.pre.push_back(std::move(pre));
        trace.activations.push_back(std::move(post));
    }
    return trace;
}

std::vector<double> DenseNet::evaluate(std::span<const double> input) const {
    return forward(input).activations.back();
}

std::size_t DenseNet::serialized_size() const {
    return kHeaderBaseBytes + kHeaderBytesPerLayer * layer_count() + 8 * parameter_count();
}

std::vector<std::uint8_t> DenseNet::serialize() const {
    std::vector<std::uint8_t> out;
    out.reserve(serialized_size());
    for (char c : {'S', 'M', 'N', 'N'}) out.push_back(static_cast<std::uint8_t>(c));
    put_u16(out, static_cast<std::uint16_t>(kSerialVersion));
    put_u16(out, static_cast<std::uint16_t>(layer_count()));
    for (std::size_t l = 0; l < layer_count(); ++l) {
        put_u32(out, static_cast<std::uint32_t>(layer_in(l)));
        put_u32(out, static_cast<std::uint32_t>(layer_out(l)));
        out.push_back(static_cast<std::uint8_t>(acts_[l]));
    }
    for (std::size_t l = 0; l < layer_count(); ++l) {
        for (double v : w_[l]) put_f64(out, v);
        for (double v : b_[l]) put_f64(out, v);
    }
    return out;
}

DenseNet DenseNet::deserialize(std::span<const std::uint8_t> bytes) {
    ByteReader r{bytes};
    r.need(4, "magic");
    if (std::memcmp(bytes.data(), "SMNN", 4) != 0)
        throw SmcParseError("SMNN parse error: bad magic at offset 0");
    r.pos = 4;
    const std::uint16_t version = r.u16("version");
    if (version != kSerialVersion)
        throw SmcParseError("SMNN parse error: unsupported version " + std::to_string(version));
    const std::uint16_t layers = r.u16("layer count");
    if (layers == 0) throw SmcParseError("SMNN parse error: zero layers");
    std::vector<std::size_t> sizes;
    std::vector<Activation> acts;
    sizes.reserve(layers + 1);
    acts.reserve(layers);
    for (std::uint16_t l = 0; l < layers; ++l) {
        const std::uint32_t in = r.u32("layer in");
        const std::uint32_t out = r.u32("layer out");
        const std::uint8_t act = r.u8("activation");
        if (act > static_cast<std::uint8_t>(Activation::softmax))
            throw SmcParseError("SMNN parse error: unknown activation code " +
                                std::to_string(act) + " at offset " + std::to_string(r.pos - 1));
        if (l == 0) {
            sizes.push_back(in);
        } else if (sizes.back() != in) {
            throw SmcParseError("SMNN parse error: layer " + std::to_string(l) +
                                " input size mismatch");
        }
        sizes.push_back(out);
        acts.push_back(static_cast<Activation>(act));
    }
    DenseNet net(std::move(sizes), std::move(acts));
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        for (double& v : net.w_[l]) v = r.f64("weights");
        for (double& v : net.b_[l]) v = r.f64("bias");
    }
    if (r.pos != bytes.size())
        throw SmcParseError("SMNN parse error: " + std::to_string(bytes.size() - r.pos) +
                            " trailing bytes at offset " + std::to_string(r.pos));
    return net;
}

bool DenseNet::same_spec(const DenseNet& other) const {
    return sizes_ == other.sizes_ && acts_ == other.acts_;
}

bool DenseNet::parameters_equal(const DenseNet& other) const {
    if (!same_spec(other)) return false;
    for (std::size_t l = 0; l < layer_count(); ++l) {
        if (std::memcmp(w_[l].data(), other.w_[l].data(), w_[l].size() * sizeof(double)) != 0)
            return false;
        if (std::memcmp(b_[l].data(), other.b_[l].data(), b_[l].size() * sizeof(double)) != 0)
            return false;
    }
    return true;
}

Gradients zero_gradients(const DenseNet& net) {
    Gradients g;
    g.weights.resize(net.layer_count());
    g.biases.resize(net.layer_count());
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        g.weights[l].assign(net.layer_out(l) * net.layer_in(l), 0.0);
        g.biases[l].assign(net.layer_out(l), 0.0);
    }
    return g;
}

void accumulate(Gradients& into, const Gradients& grads) {
    for (std::size_t l = 0; l < into.weights.size(); ++l) {
        for (std::size_t i = 0; i < into.weights[l].size(); ++i)
            into.weights[l][i] += grads.weights[l][i];
        for (std::size_t i = 0; i < into.biases[l].size(); ++i)
            into.biases[l][i] += grads.biases[l][i];
    }
}

void scale(Gradients& grads, double factor) {
    for (auto& layer : grads.weights)
        for (double& v : layer) v *= factor;
    for (auto& layer : grads.biases)
        for (double& v : layer) v *= factor;
}

double mse(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionError("mse: length mismatch");
    if (a.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        total += d * d;
    }
    return total / static_cast<double>(a.size());
}

BackwardResult backward(const DenseNet& net, const ActivationTrace& trace, Loss loss,
                        std::span<const double> target) {
    if (target.size() != net.output_size())
        throw DimensionError("backward: target length != output size");
    const auto& output = trace.activations.back();
    const std::size_t n = output.size();
    BackwardResult result;
    std::vector<double> delta(n);

    switch (loss) {
        case Loss::mse: {
            double total = 0.0;
            std::vector<double> output_grad(n);
            for (std::size_t i = 0; i < n; ++i) {
                const double d = output[i] - target[i];
                total += d * d;
                output_grad[i] = 2.0 * d / static_cast<double>(n);
            }
            result.loss = total / static_cast<double>(n);
            activation_backward(net.activation(net.layer_count() - 1), trace.pre.back(), output,
                                output_grad, delta);
            break;
        }
        case Loss::cross_entropy: {
            if (net.activation(net.layer_count() - 1) != Activation::softmax)
                throw ConfigError("backward: cross_entropy requires a softmax output layer");
            double total = 0.0;
            double target_sum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                total -= target[i] * std::log(std::max(output[i], 1e-300));
                target_sum += target[i];
            }
            result.loss = total;
            // Fused softmax + cross-entropy: dL/dz_i = p_i * sum(t) - t_i.
            for (std::size_t i = 0; i < n; ++i) delta[i] = output[i] * target_sum - target[i];
            break;
        }
    }
    result.grads = backward_core(net, trace, std::move(delta), nullptr);
    return result;
}

Gradients backward_from_output(const DenseNet& net, const ActivationTrace& trace,
                               std::span<const double> output_grad) {
    if (output_grad.size() != net.output_size())
        throw DimensionError("backward_from_output: gradient length != output size");
    std::vector<double> delta;
    activation_backward(net.activation(net.layer_count() - 1), trace.pre.back(),
                        trace.activations.back(),
                        std::vector<double>(output_grad.begin(), output_grad.end()), delta);
    return backward_core(net, trace, std::move(delta), nullptr);
}

Gradients backward_from_logits(const DenseNet& net, const ActivationTrace& trace,
                               std::span<const double> logit_grad) {
    if (logit_grad.size() != net.output_size())
        throw DimensionError("backward_from_logits: gradient length != output size");
    return backward_core(net, trace, std::vector<double>(logit_grad.begin(), logit_grad.end()),
                         nullptr);
}

Gradients backward_from_logits_with_input(const DenseNet& net, const ActivationTrace& trace,
                                          std::span<const double> logit_grad,
                                          std::vector<double>& input_grad) {
    if (logit_grad.size() != net.output_size())
        throw DimensionError("backward_from_logits: gradient length != output size");
    return backward_core(net, trace, std::vector<double>(logit_grad.begin(), logit_grad.end()),
                         &input_grad);
}

Gradients backward_from_output_with_input(const DenseNet& net, const ActivationTrace& trace,
                                          std::span<const double> output_grad,
                                          std::vector<double>& input_grad) {
    if (output_grad.size() != net.output_size())
        throw DimensionError("backward_from_output: gradient length != output size");
    std::vector<double> delta;
    activation_backward(net.activation(net.layer_count() - 1), trace.pre.back(),
                        trace.activations.back(),
                        std::vector<double>(output_grad.begin(), output_grad.end()), delta);
    return backward_core(net, trace, std::move(delta), &input_grad);
}

std::vector<double> input_gradient(const DenseNet& net, const ActivationTrace& trace,
                                   std::span<const double> output_grad) {
    if (output_grad.size() != net.output_size())
        throw DimensionError("input_gradient: gradient length != output size");
    std::vector<double> delta;
    activation_backward(net.activation(net.layer_count() - 1), trace.pre.back(),
                        trace.activations.back(),
                        std::vector<double>(output_grad.begin(), output_grad.end()), delta);
    std::vector<double> input_grad;
    backward_core(net, trace, std::move(delta), &input_grad);
    return input_grad;
}

DenseNet sgd_step(const DenseNet& net, const Gradients& grads, double lr) {
    if (grads.weights.size() != net.layer_count() || grads.biases.size() != net.layer_count())
        throw DimensionError("sgd_step: gradient layer count mismatch");
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        if (grads.weights[l].size() != net.weights(l).size() ||
            grads.biases[l].size() != net.biases(l).size())
            throw DimensionError("sgd_step: gradient shape mismatch at layer " + std::to_string(l));
        for (double v : grads.weights[l])
            if (!std::isfinite(v)) throw DivergenceError("sgd_step: non-finite weight gradient");
        for (double v : grads.biases[l])
            if (!std::isfinite(v)) throw DivergenceError("sgd_step: non-finite bias gradient");
    }
    DenseNet next = net;
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        if (!net.weights_frozen(l)) {
            auto& w = next.mutable_weights(l);
            for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * grads.weights[l][i];
        }
        if (!net.biases_frozen(l)) {
            auto& b = next.mutable_biases(l);
            for (std::size_t i = 0; i < b.size(); ++i) b[i] -= lr * grads.biases[l][i];
        }
    }
    return next;
}

}  // namespace smc::nn
