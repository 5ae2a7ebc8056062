#include "trend/mlp.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <bit>
#include <random>
#include <stdexcept>

#include <Eigen/Core>

namespace trend {

void MlpSpec::validate() const {
    if (layer_sizes.size() < 2) throw std::invalid_argument("MlpSpec: need at least input and output layer");
    for (std::size_t s : layer_sizes) {
        if (s < 1) throw std::invalid_argument("MlpSpec: every layer size must be >= 1");
    }
}

MlpSpec MlpSpec::make(std::size_t in, std::size_t hidden_width, std::size_t hidden_layers, std::size_t out,
                      Activation act, OutputActivation out_act) {
    MlpSpec spec;
    spec.layer_sizes.push_back(in);
    for (std::size_t i = 0; i < hidden_layers; ++i) spec.layer_sizes.push_back(hidden_width);
    spec.layer_sizes.push_back(out);
    spec.hidden = act;
    spec.output = out_act;
    spec.validate();
    return spec;
}

ParamSet ParamSet::initialized(const MlpSpec& spec, std::uint64_t seed) {
    spec.validate();
    ParamSet p;
    p.spec = spec;
    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
        const std::size_t fan_in = spec.layer_sizes[l];
        const std::size_t fan_out = spec.layer_sizes[l + 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        Tensor2 w(fan_out, fan_in);
        for (double& v : w.data) v = dist(rng);
        std::vector<double> b(fan_out);
        for (double& v : b) v = dist(rng);
        p.weights.push_back(std::move(w));
        p.biases.push_back(std::move(b));
    }
    return p;
}

ParamSet ParamSet::zeros(const MlpSpec& spec) {
    spec.validate();
    ParamSet p;
    p.spec = spec;
    for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
        p.weights.emplace_back(spec.layer_sizes[l + 1], spec.layer_sizes[l]);
        p.biases.emplace_back(spec.layer_sizes[l + 1], 0.0);
    }
    return p;
}

std::size_t ParamSet::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
    return n;
}

void ParamSet::fill(double v) {
    for (auto& w : weights) w.fill(v);
    for (auto& b : biases) b.assign(b.size(), v);
}

void ParamSet::add_scaled(const ParamSet& other, double scale) {
    if (other.weights.size() != weights.size()) throw std::invalid_argument("ParamSet::add_scaled: layer mismatch");
    for (std::size_t l = 0; l < weights.size(); ++l) {
        if (other.weights[l].size() != weights[l].size() || other.biases[l].size() != biases[l].size())
            throw std::invalid_argument("ParamSet::add_scaled: shape mismatch");
        for (std::size_t i = 0; i < weights[l].data.size(); ++i) weights[l].data[i] += scale * other.weights[l].data[i];
        for (std::size_t i = 0; i < biases[l].size(); ++i) biases[l][i] += scale * other.biases[l][i];
    }
}

bool ParamSet::all_finite() const {
    for (const auto& w : weights)
        if (!w.all_finite()) return false;
    for (const auto& b : biases)
        for (double v : b)
            if (!std::isfinite(v)) return false;
    return true;
}

namespace {

// Straight-line exp on a clamped domain: Cody-Waite range reduction plus a
// degree-12 Taylor kernel, 2^k spliced in through the exponent bits. Branch
// free so the autovectorizer can lift it, and bit-deterministic because every
// element runs the identical IEEE sequence in any lane.
inline double fast_exp_positive(double x) {
    const double inv_ln2 = 1.4426950408889634074;
    const double ln2_hi = 6.93147180369123816490e-01;
    const double ln2_lo = 1.90821492927058770002e-10;
    // Round-to-nearest via the 1.5*2^52 magic constant; the rounded integer
    // sits in the low mantissa bits. Valid for the clamped domain x in [0, 80].
    const double round_magic = 6755399441055744.0;
    const double kd = x * inv_ln2 + round_magic;
    const double k = kd - round_magic;
    const double r = (x - k * ln2_hi) - k * ln2_lo;
    double p = 1.0 / 479001600.0;
    p = p * r + 1.0 / 39916800.0;
    p = p * r + 1.0 / 3628800.0;
    p = p * r + 1.0 / 362880.0;
    p = p * r + 1.0 / 40320.0;
    p = p * r + 1.0 / 5040.0;
    p = p * r + 1.0 / 720.0;
    p = p * r + 1.0 / 120.0;
    p = p * r + 1.0 / 24.0;
    p = p * r + 1.0 / 6.0;
    p = p * r + 0.5;
    p = p * r + 1.0;
    p = p * r + 1.0;
    const std::int64_t ki = std::bit_cast<std::int64_t>(kd) & 0x7ff;
    const std::int64_t bits = (ki + 1023) << 52;
    return p * std::bit_cast<double>(bits);
}

// tanh(x) = sign(x) * (1 - 2/(exp(2|x|) + 1)); saturates to +-1 past |x|~19.
void fast_tanh_inplace(std::vector<double>& data) {
    double* __restrict v = data.data();
    const std::size_t n = data.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double x = v[i];
        const double ax = std::min(std::fabs(x) * 2.0, 80.0);
        const double e = fast_exp_positive(ax);
        const double t = 1.0 - 2.0 / (e + 1.0);
        v[i] = std::copysign(t, x);
    }
}

void apply_hidden(Tensor2& h, Activation act) {
    if (act == Activation::kTanh) {
        fast_tanh_inplace(h.data);
    } else {
        for (double& v : h.data) v = v > 0.0 ? v : 0.0;
    }
}

void apply_output(Tensor2& h, OutputActivation act) {
    if (act == OutputActivation::kTanh) {
        fast_tanh_inplace(h.data);
    }
}

// d(activation)/d(pre-activation) expressed through the post-activation value.
double hidden_deriv(double post, Activation act) {
    return act == Activation::kTanh ? 1.0 - post * post : (post > 0.0 ? 1.0 : 0.0);
}

double output_deriv(double post, OutputActivation act) {
    return act == OutputActivation::kTanh ? 1.0 - post * post : 1.0;
}

}  // namespace

std::vector<Tensor2> mlp_forward_trace(const ParamSet& params, const Tensor2& inputs) {
    if (inputs.cols != params.spec.input_size())
        throw std::invalid_argument("mlp_forward: input width does not match spec input size");
    const std::size_t layers = params.weights.size();
    std::vector<Tensor2> z;
    z.reserve(layers + 1);
    z.push_back(inputs);
    for (std::size_t l = 0; l < layers; ++l) {
        Tensor2 h = matmul_nt(z.back(), params.weights[l]);
        add_row_inplace(h, params.biases[l]);
        if (l + 1 < layers)
            apply_hidden(h, params.spec.hidden);
        else
            apply_output(h, params.spec.output);
        z.push_back(std::move(h));
    }
    return z;
}

Tensor2 mlp_forward_batch(const ParamSet& params, const Tensor2& inputs) {
    if (inputs.cols != params.spec.input_size())
        throw std::invalid_argument("mlp_forward: input width does not match spec input size");
    const std::size_t layers = params.weights.size();
    Tensor2 z = inputs;
    for (std::size_t l = 0; l < layers; ++l) {
        Tensor2 h = matmul_nt(z, params.weights[l]);
        add_row_inplace(h, params.biases[l]);
        if (l + 1 < layers)
            apply_hidden(h, params.spec.hidden);
        else
            apply_output(h, params.spec.output);
        z = std::move(h);
    }
    return z;
}

std::vector<double> mlp_forward(const ParamSet& params, std::span<const double> input) {
    Tensor2 in(1, input.size());
    std::copy(input.begin(), input.end(), in.data.begin());
    Tensor2 out = mlp_forward_batch(params, in);
    return out.data;
}

ParamSet mlp_backward_batch(const ParamSet& params, const Tensor2& inputs, const Tensor2& upstream,
                            Tensor2* input_grads) {
    return mlp_backward_from_trace(params, mlp_forward_trace(params, inputs), upstream, input_grads);
}

ParamSet mlp_backward_from_trace(const ParamSet& params, const std::vector<Tensor2>& z, const Tensor2& upstream,
                                 Tensor2* input_grads) {
    const std::size_t layers = params.weights.size();
    if (z.size() != layers + 1) throw std::invalid_argument("mlp_backward: trace length mismatch");
    if (upstream.cols != params.spec.output_size() || upstream.rows != z.front().rows)
        throw std::invalid_argument("mlp_backward: upstream gradient shape mismatch");

    ParamSet grads = ParamSet::zeros(params.spec);
    Tensor2 delta = upstream;  // dL/dz[l+1], starts at the output

    for (std::size_t li = layers; li-- > 0;) {
        // Through the activation: dL/dh = dL/dz ⊙ act'(h)
        const Tensor2& post = z[li + 1];
        if (li + 1 == layers) {
            for (std::size_t i = 0; i < delta.data.size(); ++i)
                delta.data[i] *= output_deriv(post.data[i], params.spec.output);
        } else {
            for (std::size_t i = 0; i < delta.data.size(); ++i)
                delta.data[i] *= hidden_deriv(post.data[i], params.spec.hidden);
        }
        grads.weights[li] = matmul_tn(delta, z[li]);
        grads.biases[li] = column_sums(delta);
        if (li > 0 || input_grads != nullptr) {
            Tensor2 prev = matmul_nn(delta, params.weights[li]);
            if (li == 0 && input_grads != nullptr) *input_grads = std::move(prev);
            else delta = std::move(prev);
        }
    }
    return grads;
}

BackwardResult mlp_backward(const ParamSet& params, std::span<const double> input,
                            std::span<const double> upstream) {
    Tensor2 in(1, input.size());
    std::copy(input.begin(), input.end(), in.data.begin());
    Tensor2 up(1, upstream.size());
    std::copy(upstream.begin(), upstream.end(), up.data.begin());
    Tensor2 in_grad;
    BackwardResult res{mlp_backward_batch(params, in, up, &in_grad), {}};
    res.input_grad = std::move(in_grad.data);
    return res;
}

}  // namespace trend
