#pragma once

#include <optional>
#include <string>

#include "bdps/forward_ops.hpp"
#include "bdps/grid.hpp"
#include "bdps/schedule.hpp"
#include "bdps/score.hpp"

namespace bdps {

enum class RegKind { none, l1, l0 };

RegKind reg_kind_from_string(const std::string& s);
std::string to_string(RegKind k);

struct GuidanceConfig {
    double step_size = 0.3;        // alpha
    RegKind reg_kind = RegKind::none;
    double reg_weight = 0.0;       // lambda
    double l0_threshold = 1e-3;    // tau; effective hard threshold is tau * lambda
    bool project_kernel = true;
    // Ablation switch: gradient of the squared residual scaled by 1/sigma^2
    // instead of the static-step unsquared norm.
    bool squared_residual = false;
    double measurement_sigma = 0.02;  // only used by the squared variant
    // Unsquared-norm gradients are defined as 0 below this residual.
    double residual_guard = 1e-12;
};

/// Tweedie posterior mean: (v + (1 - ab_i) * score) / sqrt(ab_i).
SignalGrid tweedie_denoise(const ScoreModel& model, const SignalGrid& v, int i, const NoiseSchedule& sched);

/// Same formula applied to an externally supplied score grid.
SignalGrid tweedie_from_score(const SignalGrid& v, const SignalGrid& score, int i, const NoiseSchedule& sched);

/// Euclidean projection onto {k : sum k = 1, k >= 0} by sort-and-threshold.
/// Members of the set (and outputs of the projection) pass through bit-exactly.
SignalGrid project_simplex(const SignalGrid& k);

struct RegTerm {
    double value = 0.0;
    SignalGrid descent;  // gradient-like term; zero grid for l0 and none
};

/// l1: (lambda * ||k||_1, lambda * sign(k)). l0: counts entries above tau and
/// carries no gradient -- it acts through hard_threshold after the guided step.
RegTerm regularizer(RegKind kind, const SignalGrid& k, double lambda, double tau);

/// Zeroes entries with |k_j| <= threshold (the l0 proximal surrogate).
void hard_threshold(SignalGrid& k, double threshold);

/// Unsquared data fidelity ||y - k (*) x||_2, or ||y - k (*) T_phi(x)||_2.
double residual(const Measurement& y, const SignalGrid& x0_hat, const SignalGrid& k0_hat,
                const std::optional<SignalGrid>& phi0_hat);

/// Inputs and outputs of one guidance evaluation at step i. The kernel
/// estimate is projected (when configured) before entering the residual and
/// the projection is treated as identity during backpropagation.
struct GuidanceEval {
    SignalGrid x0_hat;
    SignalGrid k0_hat;                  // projected when config.project_kernel
    std::optional<SignalGrid> phi0_hat;
    double residual_value = 0.0;
    SignalGrid grad_x;                  // with respect to x_i
    SignalGrid grad_k;                  // with respect to k_i (includes the regularizer term)
    std::optional<SignalGrid> grad_phi;
};

struct GuidanceModels {
    const ScoreModel* image = nullptr;
    const ScoreModel* kernel = nullptr;
    const ScoreModel* tilt = nullptr;  // null when not a turbulence solve
};

struct GuidanceStates {
    const SignalGrid* x_i = nullptr;
    const SignalGrid* k_i = nullptr;
    const SignalGrid* phi_i = nullptr;
};

/// Full coupled gradient computation of Algorithm-1 style guidance: Tweedie
/// denoising of every branch, shared residual, and per-branch chain rule
/// through the forward operator adjoints and the Tweedie Jacobian (applied
/// as score VJPs). Throws DivergenceError on non-finite gradients.
GuidanceEval guidance_gradients(const Measurement& y, const GuidanceModels& models, const GuidanceStates& states,
                                int i, const NoiseSchedule& sched, const GuidanceConfig& config);

}  // namespace bdps
