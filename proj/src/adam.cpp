#include "trend/adam.hpp"

#include <cmath>
#include <string>

#include "trend/errors.hpp"

namespace trend {

AdamState AdamState::for_params(const ParamSet& params, double lr) {
    AdamState s;
    s.m = ParamSet::zeros(params.spec);
    s.v = ParamSet::zeros(params.spec);
    s.lr = lr;
    return s;
}

namespace {

void update_block(std::span<double> x, std::span<const double> g, std::span<double> m, std::span<double> v,
                  const AdamState& s, double bc1, double bc2, const char* what, std::size_t layer) {
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double gi = g[i];
        if (!std::isfinite(gi)) {
            throw NumericError("adam: non-finite gradient at layer " + std::to_string(layer) + " " + what +
                               "[" + std::to_string(i) + "]");
        }
        m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * gi;
        v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * gi * gi;
        const double m_hat = m[i] / bc1;
        const double v_hat = v[i] / bc2;
        x[i] -= s.lr * m_hat / (std::sqrt(v_hat) + s.eps);
    }
}

}  // namespace

void adam_step(AdamState& state, ParamSet& params, const ParamSet& grads) {
    if (grads.weights.size() != params.weights.size())
        throw std::invalid_argument("adam_step: gradient layer count mismatch");
    state.step_count += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        if (grads.weights[l].size() != params.weights[l].size() || grads.biases[l].size() != params.biases[l].size())
            throw std::invalid_argument("adam_step: gradient shape mismatch at layer " + std::to_string(l));
        update_block(params.weights[l].data, grads.weights[l].data, state.m.weights[l].data,
                     state.v.weights[l].data, state, bc1, bc2, "weights", l);
        update_block(params.biases[l], grads.biases[l], state.m.biases[l], state.v.biases[l], state, bc1, bc2,
                     "biases", l);
    }
}

}  // namespace trend
