#pragma once

#include <optional>
#include <vector>

#include "bdps/forward_ops.hpp"
#include "bdps/grid.hpp"
#include "bdps/guidance.hpp"
#include "bdps/rng.hpp"
#include "bdps/schedule.hpp"
#include "bdps/score.hpp"

namespace bdps {

// Reverse-diffusion engines. One solve owns its chain states; the per-branch
// noise draws come from disjoint counter-based sub-streams (image = 0,
// kernel = 1, tilt = 2, initial states at 16 + branch), so results are
// bit-identical across runs and do not depend on branch evaluation order.

struct SamplerConfig {
    GuidanceConfig guidance;
    int snapshot_stride = 0;  // 0 -> ceil(N / 50)
    // Keep the ancestral noise term at the final step (the posterior std is 0
    // there under this schedule, so this is recorded but inert).
    bool noise_final_step = false;
};

struct GroundTruth {
    std::optional<SignalGrid> x;
    std::optional<SignalGrid> k;
    std::optional<SignalGrid> phi;
};

struct Snapshot {
    int step = 0;              // chain index i the estimates were formed at
    double elapsed_frac = 0.0; // (N - i + 1) / N
    SignalGrid x0_hat;
    SignalGrid k0_hat;
    std::optional<SignalGrid> phi0_hat;
    double residual = 0.0;
    std::optional<double> mse_x, mse_k, mse_phi;
};

struct SolveResult {
    SignalGrid x0;
    SignalGrid k0;                      // satisfies the simplex constraints
    std::optional<SignalGrid> phi0;
    std::vector<Snapshot> trajectory;
    uint64_t seed = 0;
    int n_steps = 0;
};

/// One ancestral update: c1(i) v_i + c2(i) v0_hat + post_std(i) z, with the
/// noise suppressed at i = 1 unless noise_final_step is set.
SignalGrid ancestral_step(const SignalGrid& v_i, const SignalGrid& v0_hat, int i, const NoiseSchedule& sched,
                          const SignalGrid& z, bool noise_final_step = false);

/// Unconditional reverse chain over the model's domain; branch_id selects the
/// sub-stream (0 matches a solve's image branch, 1 its kernel branch).
SignalGrid sample_prior(const ScoreModel& model, const NoiseSchedule& sched, const NoiseStream& rng,
                        uint64_t branch_id = 0);

/// Posterior sampling with a known, fixed kernel (the non-blind case).
SolveResult dps_nonblind(const Measurement& y, const SignalGrid& kernel, const ScoreModel& image_model,
                         const NoiseSchedule& sched, const SamplerConfig& config, const NoiseStream& rng,
                         const GroundTruth& gt = {});

/// Parallel image/kernel reverse diffusion coupled through the measurement
/// residual (blind deblurring).
SolveResult blind_dps_deblur(const Measurement& y, const ScoreModel& image_model, const ScoreModel& kernel_model,
                             const NoiseSchedule& sched, const SamplerConfig& config, const NoiseStream& rng,
                             const GroundTruth& gt = {});

/// Three parallel chains (image, kernel, tilt field) for the tilt-blur
/// turbulence model. When freeze_tilt_at_zero is set the tilt chain is pinned
/// to the zero field and the solve reduces bit-exactly to blind_dps_deblur.
SolveResult blind_dps_turbulence(const Measurement& y, const ScoreModel& image_model, const ScoreModel& kernel_model,
                                 const ScoreModel& tilt_model, const NoiseSchedule& sched, const SamplerConfig& config,
                                 const NoiseStream& rng, const GroundTruth& gt = {},
                                 bool freeze_tilt_at_zero = false);

struct UniformBaselineConfig {
    double alpha_x = 0.3;
    double alpha_k = 0.3;
    double lambda = 5.0;      // l0 weight
    double sigma_init = 1.0;  // std of the Gaussian kernel initialization
    int kernel_h = 5;
    int kernel_w = 5;
    double l0_threshold = 1e-3;
    SamplerConfig sampler;    // guidance.reg/step_size fields are ignored; alphas above apply
};

/// Ablation: no kernel diffusion prior. The kernel starts as a Gaussian
/// kernel, is projected every step, and moves only along the likelihood
/// gradient with an l0 proximal step.
SolveResult uniform_prior_baseline(const Measurement& y, const ScoreModel& image_model, const NoiseSchedule& sched,
                                   const UniformBaselineConfig& config, const NoiseStream& rng,
                                   const GroundTruth& gt = {});

}  // namespace bdps
