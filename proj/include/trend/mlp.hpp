#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "trend/tensor.hpp"

namespace trend {

enum class Activation { kTanh, kRelu };
enum class OutputActivation { kIdentity, kTanh };

// Fixed fully-connected architecture: layer_sizes = {input, hidden..., output}.
struct MlpSpec {
    std::vector<std::size_t> layer_sizes;
    Activation hidden = Activation::kTanh;
    OutputActivation output = OutputActivation::kIdentity;

    void validate() const;  // throws std::invalid_argument on bad sizes
    std::size_t input_size() const { return layer_sizes.front(); }
    std::size_t output_size() const { return layer_sizes.back(); }
    std::size_t layer_count() const { return layer_sizes.size() - 1; }

    bool operator==(const MlpSpec&) const = default;

    static MlpSpec make(std::size_t in, std::size_t hidden_width, std::size_t hidden_layers, std::size_t out,
                        Activation act, OutputActivation out_act);
};

// Weight matrices (out×in) and bias vectors for one MlpSpec. Also reused as
// the gradient container since gradients mirror parameter shapes exactly.
struct ParamSet {
    MlpSpec spec;
    std::vector<Tensor2> weights;
    std::vector<std::vector<double>> biases;

    // Seeded uniform fan-in init: every entry ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
    static ParamSet initialized(const MlpSpec& spec, std::uint64_t seed);
    static ParamSet zeros(const MlpSpec& spec);

    std::size_t parameter_count() const;
    void fill(double v);
    // Elementwise axpy: this += scale * other. Shapes must match.
    void add_scaled(const ParamSet& other, double scale);
    bool all_finite() const;
};

std::vector<double> mlp_forward(const ParamSet& params, std::span<const double> input);

// inputs: N×input_size, returns N×output_size.
Tensor2 mlp_forward_batch(const ParamSet& params, const Tensor2& inputs);

struct BackwardResult {
    ParamSet grads;
    std::vector<double> input_grad;
};

// Reverse-mode gradients of sum(upstream ⊙ output) w.r.t. parameters and input.
BackwardResult mlp_backward(const ParamSet& params, std::span<const double> input,
                            std::span<const double> upstream);

// Batched backward; parameter gradients are summed over rows. If input_grads
// is non-null it receives dL/dinputs (same shape as inputs).
ParamSet mlp_backward_batch(const ParamSet& params, const Tensor2& inputs, const Tensor2& upstream,
                            Tensor2* input_grads = nullptr);

// Post-activation values of every layer, trace[0] = inputs, trace.back() =
// outputs. Lets callers reuse one forward pass for loss and gradient.
std::vector<Tensor2> mlp_forward_trace(const ParamSet& params, const Tensor2& inputs);
ParamSet mlp_backward_from_trace(const ParamSet& params, const std::vector<Tensor2>& trace, const Tensor2& upstream,
                                 Tensor2* input_grads = nullptr);

}  // namespace trend
