#pragma once

#include <vector>

#include "bdps/score.hpp"

namespace bdps {

// Internal MLP plumbing shared by score.cpp and mlp.cpp.

/// Forward pass; x is the flattened signal, ab = alpha_bar at the step.
void mlp_forward(const MlpScore& net, const std::vector<double>& x, double ab, std::vector<double>& out);

/// Gradient of <cot, net(x)> with respect to the signal part of the input.
void mlp_input_vjp(const MlpScore& net, const std::vector<double>& x, double ab, const std::vector<double>& cot,
                   std::vector<double>& grad_x);

}  // namespace bdps
