#pragma once

#include "trend/mlp.hpp"

namespace trend {

// Per-parameter Adam moments; shapes mirror the ParamSet they optimize.
struct AdamState {
    ParamSet m;
    ParamSet v;
    long step_count = 0;
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState for_params(const ParamSet& params, double lr);
};

// One bias-corrected Adam update of params in place. Throws NumericError
// naming the offending parameter if any gradient entry is non-finite.
void adam_step(AdamState& state, ParamSet& params, const ParamSet& grads);

}  // namespace trend
