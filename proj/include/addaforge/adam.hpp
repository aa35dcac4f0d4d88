#pragma once

#include <cstdint>
#include <vector>

#include "addaforge/tensor.hpp"

namespace addaforge {

struct AdamConfig {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Per-parameter first/second moments; step_count increments by exactly one
// per adam_step.
struct AdamState {
    AdamConfig config;
    std::uint64_t step_count = 0;
    std::vector<Tensor> m;
    std::vector<Tensor> v;
};

AdamState make_adam(const std::vector<const Tensor*>& params, const AdamConfig& config);
AdamState make_adam(const std::vector<Tensor*>& params, const AdamConfig& config);

// Bias-corrected Adam update in place.
void adam_step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads, AdamState& state);

}  // namespace addaforge
