#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "test_helpers.hpp"
#include "trend/adam.hpp"
#include "trend/errors.hpp"
#include "trend/mlp.hpp"

using namespace trend;
using trend::testing::finite_difference_grads;
using trend::testing::max_grad_rel_error;
using trend::testing::params_equal;
using trend::testing::rel_error;

namespace {

// Independent forward oracle: plain nested loops, no Tensor2 machinery.
std::vector<double> oracle_forward(const ParamSet& p, const std::vector<double>& input) {
    std::vector<double> z = input;
    const std::size_t layers = p.weights.size();
    for (std::size_t l = 0; l < layers; ++l) {
        const std::size_t out_n = p.spec.layer_sizes[l + 1];
        const std::size_t in_n = p.spec.layer_sizes[l];
        std::vector<double> h(out_n, 0.0);
        for (std::size_t o = 0; o < out_n; ++o) {
            double acc = p.biases[l][o];
            for (std::size_t i = 0; i < in_n; ++i) acc += p.weights[l].at(o, i) * z[i];
            h[o] = acc;
        }
        if (l + 1 < layers) {
            for (double& v : h)
                v = p.spec.hidden == Activation::kTanh ? std::tanh(v) : (v > 0.0 ? v : 0.0);
        } else if (p.spec.output == OutputActivation::kTanh) {
            for (double& v : h) v = std::tanh(v);
        }
        z = std::move(h);
    }
    return z;
}

}  // namespace

TEST_CASE("mlp_forward zero parameters give zero output") {
    MlpSpec spec = MlpSpec::make(3, 8, 2, 2, Activation::kTanh, OutputActivation::kIdentity);
    ParamSet p = ParamSet::zeros(spec);
    auto out = mlp_forward(p, std::vector<double>{0.3, -2.0, 11.0});
    for (double v : out) CHECK(v == 0.0);
}

TEST_CASE("mlp_forward identity single layer") {
    MlpSpec spec;
    spec.layer_sizes = {2, 2};
    ParamSet p = ParamSet::zeros(spec);
    p.weights[0].at(0, 0) = 1.0;
    p.weights[0].at(1, 1) = 1.0;
    auto out = mlp_forward(p, std::vector<double>{1.5, -2.0});
    CHECK(out[0] == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(out[1] == doctest::Approx(-2.0).epsilon(1e-15));
}

TEST_CASE("mlp_forward matches independent oracle") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    for (int rep = 0; rep < 10; ++rep) {
        MlpSpec spec = MlpSpec::make(4, 6, 2, 3, rep % 2 == 0 ? Activation::kTanh : Activation::kRelu,
                                     rep % 3 == 0 ? OutputActivation::kTanh : OutputActivation::kIdentity);
        ParamSet p = ParamSet::initialized(spec, 100 + rep);
        std::vector<double> input(4);
        for (double& v : input) v = dist(rng);
        auto got = mlp_forward(p, input);
        auto want = oracle_forward(p, input);
        for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::fabs(got[i] - want[i]) < 1e-12);
    }
}

TEST_CASE("mlp_backward zero upstream gives zero gradients") {
    MlpSpec spec = MlpSpec::make(3, 5, 2, 2, Activation::kTanh, OutputActivation::kIdentity);
    ParamSet p = ParamSet::initialized(spec, 3);
    auto res = mlp_backward(p, std::vector<double>{0.1, 0.2, 0.3}, std::vector<double>{0.0, 0.0});
    for (const auto& w : res.grads.weights)
        for (double v : w.data) CHECK(v == 0.0);
    for (double v : res.input_grad) CHECK(v == 0.0);
}

TEST_CASE("mlp_backward linear layer weight gradient is outer product") {
    MlpSpec spec;
    spec.layer_sizes = {3, 2};
    ParamSet p = ParamSet::initialized(spec, 11);
    const std::vector<double> input{0.5, -1.0, 2.0};
    auto res = mlp_backward(p, input, std::vector<double>{2.0, -3.0});
    for (std::size_t o = 0; o < 2; ++o) {
        const double go = o == 0 ? 2.0 : -3.0;
        for (std::size_t i = 0; i < 3; ++i)
            CHECK(res.grads.weights[0].at(o, i) == doctest::Approx(go * input[i]).epsilon(1e-14));
        CHECK(res.grads.biases[0][o] == doctest::Approx(go).epsilon(1e-14));
    }
    // Input gradient of a linear map is W^T g.
    for (std::size_t i = 0; i < 3; ++i) {
        const double want = p.weights[0].at(0, i) * 2.0 + p.weights[0].at(1, i) * -3.0;
        CHECK(res.input_grad[i] == doctest::Approx(want).epsilon(1e-14));
    }
}

TEST_CASE("mlp_backward matches central finite differences on a tanh net") {
    MlpSpec spec = MlpSpec::make(4, 6, 3, 2, Activation::kTanh, OutputActivation::kIdentity);
    ParamSet p = ParamSet::initialized(spec, 21);
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> dist(-1.5, 1.5);
    std::vector<double> input(4), upstream(2);
    for (double& v : input) v = dist(rng);
    for (double& v : upstream) v = dist(rng);

    auto res = mlp_backward(p, input, upstream);
    auto loss = [&](const ParamSet& q) {
        auto out = mlp_forward(q, input);
        double s = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * upstream[i];
        return s;
    };
    ParamSet fd = finite_difference_grads(p, loss);
    CHECK(max_grad_rel_error(res.grads, fd) < 1e-4);
}

TEST_CASE("batch backward equals summed single-row backwards") {
    MlpSpec spec = MlpSpec::make(3, 5, 2, 2, Activation::kRelu, OutputActivation::kIdentity);
    ParamSet p = ParamSet::initialized(spec, 31);
    std::mt19937_64 rng(32);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    const std::size_t n = 7;
    Tensor2 inputs(n, 3), upstream(n, 2);
    for (double& v : inputs.data) v = dist(rng);
    for (double& v : upstream.data) v = dist(rng);

    Tensor2 in_grads;
    ParamSet batch = mlp_backward_batch(p, inputs, upstream, &in_grads);
    ParamSet summed = ParamSet::zeros(spec);
    for (std::size_t r = 0; r < n; ++r) {
        auto res = mlp_backward(p, inputs.row(r), upstream.row(r));
        summed.add_scaled(res.grads, 1.0);
        for (std::size_t c = 0; c < 3; ++c)
            CHECK(in_grads.at(r, c) == doctest::Approx(res.input_grad[c]).epsilon(1e-12));
    }
    CHECK(max_grad_rel_error(batch, summed) < 1e-10);
}

TEST_CASE("adam zero gradient leaves parameters unchanged") {
    MlpSpec spec = MlpSpec::make(2, 4, 1, 1, Activation::kTanh, OutputActivation::kIdentity);
    ParamSet p = ParamSet::initialized(spec, 41);
    ParamSet before = p;
    AdamState st = AdamState::for_params(p, 1e-3);
    adam_step(st, p, ParamSet::zeros(spec));
    CHECK(params_equal(p, before));
    CHECK(st.step_count == 1);
    for (const auto& w : st.m.weights)
        for (double v : w.data) CHECK(v == 0.0);
}

TEST_CASE("adam first step is approximately -lr * sign(g)") {
    MlpSpec spec;
    spec.layer_sizes = {2, 2};
    ParamSet p = ParamSet::zeros(spec);
    ParamSet g = ParamSet::zeros(spec);
    g.weights[0].fill(0.37);
    g.biases[0] = {-0.9, 2.4};
    AdamState st = AdamState::for_params(p, 1e-3);
    adam_step(st, p, g);
    for (double v : p.weights[0].data) CHECK(v == doctest::Approx(-1e-3).epsilon(1e-4));
    CHECK(p.biases[0][0] == doctest::Approx(1e-3).epsilon(1e-4));
    CHECK(p.biases[0][1] == doctest::Approx(-1e-3).epsilon(1e-4));
}

TEST_CASE("adam two fixed-gradient steps match a scalar reference") {
    // Scalar Adam recomputed from the textbook update rules.
    const double lr = 1e-3, b1 = 0.9, b2 = 0.999, eps = 1e-8, g = 0.73;
    double x_ref = 0.25, m = 0.0, v = 0.0;
    for (int t = 1; t <= 2; ++t) {
        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        const double mh = m / (1 - std::pow(b1, t));
        const double vh = v / (1 - std::pow(b2, t));
        x_ref -= lr * mh / (std::sqrt(vh) + eps);
    }

    MlpSpec spec;
    spec.layer_sizes = {1, 1};
    ParamSet p = ParamSet::zeros(spec);
    p.weights[0].at(0, 0) = 0.25;
    ParamSet grad = ParamSet::zeros(spec);
    grad.weights[0].at(0, 0) = g;
    AdamState st = AdamState::for_params(p, lr);
    adam_step(st, p, grad);
    adam_step(st, p, grad);
    CHECK(p.weights[0].at(0, 0) == doctest::Approx(x_ref).epsilon(1e-14));
}

TEST_CASE("adam rejects non-finite gradients with location") {
    MlpSpec spec = MlpSpec::make(2, 3, 1, 1, Activation::kTanh, OutputActivation::kIdentity);
    ParamSet p = ParamSet::initialized(spec, 51);
    ParamSet g = ParamSet::zeros(spec);
    g.weights[1].at(0, 2) = std::numeric_limits<double>::quiet_NaN();
    AdamState st = AdamState::for_params(p, 1e-3);
    CHECK_THROWS_WITH_AS(adam_step(st, p, g), doctest::Contains("layer 1"), NumericError);
}

TEST_CASE("identical seeds give bit-identical initialization") {
    MlpSpec spec = MlpSpec::make(5, 16, 2, 3, Activation::kRelu, OutputActivation::kIdentity);
    ParamSet a = ParamSet::initialized(spec, 777);
    ParamSet b = ParamSet::initialized(spec, 777);
    ParamSet c = ParamSet::initialized(spec, 778);
    CHECK(params_equal(a, b));
    CHECK_FALSE(params_equal(a, c));
}

TEST_CASE("forward and backward stay finite for large inputs") {
    std::mt19937_64 rng(61);
    std::uniform_real_distribution<double> dist(-1e3, 1e3);
    for (int rep = 0; rep < 5; ++rep) {
        MlpSpec spec = MlpSpec::make(3, 8, 2, 2, rep % 2 == 0 ? Activation::kTanh : Activation::kRelu,
                                     OutputActivation::kIdentity);
        ParamSet p = ParamSet::initialized(spec, 70 + rep);
        std::vector<double> input(3), upstream(2, 1.0);
        for (double& v : input) v = dist(rng);
        auto out = mlp_forward(p, input);
        for (double v : out) CHECK(std::isfinite(v));
        auto res = mlp_backward(p, input, upstream);
        CHECK(res.grads.all_finite());
    }
}

TEST_CASE("dimension mismatches are hard errors") {
    MlpSpec spec = MlpSpec::make(3, 4, 1, 2, Activation::kTanh, OutputActivation::kIdentity);
    ParamSet p = ParamSet::initialized(spec, 81);
    CHECK_THROWS_AS(mlp_forward(p, std::vector<double>{1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(mlp_backward(p, std::vector<double>{1.0, 2.0, 3.0}, std::vector<double>{1.0}),
                    std::invalid_argument);
    MlpSpec bad;
    bad.layer_sizes = {3};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
