#pragma once

#include <cstdint>
#include <vector>

#include "barb/tensor.hpp"

namespace barb {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// First/second moment accumulators, one slot per parameter tensor, in the
// order the parameters were registered.
struct AdamState {
    AdamConfig config;
    std::uint64_t step = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;

    static AdamState init(const std::vector<Tensor*>& params, AdamConfig config);
};

// Bias-corrected adaptive-moment update applied in place. Parameters must
// carry gradients of matching shape.
void adam_step(const std::vector<Tensor*>& params, AdamState& state);

}  // namespace barb
