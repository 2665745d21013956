#include "bdps/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bdps/errors.hpp"

namespace bdps {

SignalGrid ancestral_step(const SignalGrid& v_i, const SignalGrid& v0_hat, int i, const NoiseSchedule& sched,
                          const SignalGrid& z, bool noise_final_step) {
    require_same_shape(v_i, v0_hat, "ancestral_step");
    require_same_shape(v_i, z, "ancestral_step");
    if (i < 1) throw ParameterError("ancestral_step: index must be >= 1");
    const double ab_i = sched.alpha_bar(i);
    const double ab_prev = sched.alpha_bar(i - 1);
    const double c1 = std::sqrt(sched.alpha(i)) * (1.0 - ab_prev) / (1.0 - ab_i);
    const double c2 = std::sqrt(ab_prev) * sched.beta(i) / (1.0 - ab_i);
    const double s = (i == 1 && !noise_final_step) ? 0.0 : sched.post_std(i);
    SignalGrid out = v_i;
    for (size_t j = 0; j < out.size(); ++j) out.v[j] = c1 * v_i.v[j] + c2 * v0_hat.v[j] + s * z.v[j];
    return out;
}

namespace {

enum class KernelMode { absent, diffused, frozen, gradient_only };

struct ChainSetup {
    const Measurement* y = nullptr;  // null: unconditional prior sampling
    const ScoreModel* image = nullptr;
    KernelMode kmode = KernelMode::absent;
    const ScoreModel* kernel = nullptr;      // diffused mode
    SignalGrid kernel_start;                 // frozen / gradient_only modes
    const ScoreModel* tilt = nullptr;        // diffused tilt chain when set
    double alpha_x = 0.0;
    double alpha_k = 0.0;
    double alpha_phi = 0.0;
    RegKind kreg = RegKind::none;
    double lambda = 0.0;
    double l0_threshold = 1e-3;
    GroundTruth gt;
    uint64_t branch_offset = 0;  // lets sample_prior map onto any branch's streams
};

void check_finite_state(const SignalGrid& s, const char* name, int i) {
    if (!all_finite(s))
        throw DivergenceError(std::string("sampler: non-finite ") + name + " state at step " + std::to_string(i), i);
}

SolveResult run_chains(const ChainSetup& setup, const NoiseSchedule& sched, const SamplerConfig& config,
                       const NoiseStream& rng) {
    const int N = sched.n_steps();
    const int stride = config.snapshot_stride > 0 ? config.snapshot_stride : (N + 49) / 50;

    NoiseStream noise_x = rng.derive(setup.branch_offset + 0);
    NoiseStream noise_k = rng.derive(setup.branch_offset + 1);
    NoiseStream noise_phi = rng.derive(setup.branch_offset + 2);
    NoiseStream init_x = rng.derive(setup.branch_offset + 16);
    NoiseStream init_k = rng.derive(setup.branch_offset + 17);
    NoiseStream init_phi = rng.derive(setup.branch_offset + 18);

    SignalGrid x = init_x.normal_grid(setup.image->domain_h(), setup.image->domain_w(), setup.image->domain_c());

    SignalGrid k;
    if (setup.kmode == KernelMode::diffused)
        k = init_k.normal_grid(setup.kernel->domain_h(), setup.kernel->domain_w(), 1);
    else if (setup.kmode != KernelMode::absent)
        k = setup.kernel_start;

    SignalGrid phi;
    const bool has_tilt = setup.tilt != nullptr;
    if (has_tilt) phi = init_phi.normal_grid(setup.tilt->domain_h(), setup.tilt->domain_w(), 2);

    GuidanceConfig gcfg;  // only used when y is present
    if (setup.y) {
        gcfg = config.guidance;
        gcfg.reg_kind = setup.kreg;
        gcfg.reg_weight = setup.lambda;
        gcfg.l0_threshold = setup.l0_threshold;
    }

    SolveResult result;
    result.seed = rng.seed();
    result.n_steps = N;

    const double prox_threshold = (setup.kreg == RegKind::l0) ? setup.l0_threshold * setup.lambda : 0.0;

    for (int i = N; i >= 1; --i) {
        if (setup.kmode == KernelMode::gradient_only) k = project_simplex(k);

        SignalGrid x0_hat, k0_hat, grad_x, grad_k;
        std::optional<SignalGrid> phi0_hat, grad_phi;
        double res_value = 0.0;

        if (setup.y) {
            GuidanceModels models;
            models.image = setup.image;
            models.kernel = (setup.kmode == KernelMode::diffused) ? setup.kernel : nullptr;
            models.tilt = setup.tilt;
            GuidanceStates states;
            states.x_i = &x;
            states.k_i = &k;
            states.phi_i = has_tilt ? &phi : nullptr;
            GuidanceEval ev = guidance_gradients(*setup.y, models, states, i, sched, gcfg);
            x0_hat = std::move(ev.x0_hat);
            k0_hat = std::move(ev.k0_hat);
            phi0_hat = std::move(ev.phi0_hat);
            grad_x = std::move(ev.grad_x);
            grad_k = std::move(ev.grad_k);
            grad_phi = std::move(ev.grad_phi);
            res_value = ev.residual_value;
        } else {
            x0_hat = tweedie_denoise(*setup.image, x, i, sched);
            if (setup.kmode == KernelMode::diffused) k0_hat = tweedie_denoise(*setup.kernel, k, i, sched);
            if (has_tilt) phi0_hat = tweedie_denoise(*setup.tilt, phi, i, sched);
        }

        if ((N - i) % stride == 0 || i == 1) {
            Snapshot snap;
            snap.step = i;
            snap.elapsed_frac = static_cast<double>(N - i + 1) / N;
            snap.x0_hat = x0_hat;
            snap.k0_hat = (setup.kmode == KernelMode::absent) ? SignalGrid() : (setup.y ? k0_hat : k);
            snap.phi0_hat = phi0_hat;
            snap.residual = res_value;
            if (setup.gt.x) snap.mse_x = mean_sq_diff(x0_hat, *setup.gt.x);
            if (setup.gt.k && snap.k0_hat.size()) snap.mse_k = mean_sq_diff(snap.k0_hat, *setup.gt.k);
            if (setup.gt.phi && phi0_hat) snap.mse_phi = mean_sq_diff(*phi0_hat, *setup.gt.phi);
            result.trajectory.push_back(std::move(snap));
        }

        // Ancestral updates; each branch consumes only its own stream.
        {
            SignalGrid z = noise_x.normal_grid(x.h, x.w, x.c);
            x = ancestral_step(x, x0_hat, i, sched, z, config.noise_final_step);
            if (setup.y && setup.alpha_x != 0.0) axpy(-setup.alpha_x, grad_x, x);
            check_finite_state(x, "image", i);
        }
        if (setup.kmode == KernelMode::diffused) {
            SignalGrid z = noise_k.normal_grid(k.h, k.w, k.c);
            k = ancestral_step(k, k0_hat, i, sched, z, config.noise_final_step);
            if (setup.y && setup.alpha_k != 0.0) axpy(-setup.alpha_k, grad_k, k);
            if (prox_threshold > 0.0) hard_threshold(k, prox_threshold);
            check_finite_state(k, "kernel", i);
        } else if (setup.kmode == KernelMode::gradient_only) {
            if (setup.alpha_k != 0.0) axpy(-setup.alpha_k, grad_k, k);
            if (prox_threshold > 0.0) hard_threshold(k, prox_threshold);
            check_finite_state(k, "kernel", i);
        }
        if (has_tilt) {
            SignalGrid z = noise_phi.normal_grid(phi.h, phi.w, phi.c);
            phi = ancestral_step(phi, *phi0_hat, i, sched, z, config.noise_final_step);
            if (setup.y && setup.alpha_phi != 0.0) axpy(-setup.alpha_phi, *grad_phi, phi);
            check_finite_state(phi, "tilt", i);
        }
    }

    result.x0 = std::move(x);
    switch (setup.kmode) {
        case KernelMode::absent: break;
        case KernelMode::frozen: result.k0 = k; break;
        case KernelMode::diffused:
            // Final kernel is the last denoised estimate pushed onto the
            // constraint set, independent of the per-step projection toggle.
            result.k0 = project_simplex(result.trajectory.back().k0_hat);
            break;
        case KernelMode::gradient_only: result.k0 = project_simplex(k); break;
    }
    if (has_tilt) result.phi0 = std::move(phi);
    return result;
}

}  // namespace

SignalGrid sample_prior(const ScoreModel& model, const NoiseSchedule& sched, const NoiseStream& rng,
                        uint64_t branch_id) {
    ChainSetup setup;
    setup.image = &model;
    setup.branch_offset = branch_id;
    SamplerConfig config;
    config.snapshot_stride = sched.n_steps() + 1;  // no snapshots needed
    return run_chains(setup, sched, config, rng).x0;
}

SolveResult dps_nonblind(const Measurement& y, const SignalGrid& kernel, const ScoreModel& image_model,
                         const NoiseSchedule& sched, const SamplerConfig& config, const NoiseStream& rng,
                         const GroundTruth& gt) {
    ChainSetup setup;
    setup.y = &y;
    setup.image = &image_model;
    setup.kmode = KernelMode::frozen;
    setup.kernel_start = kernel;
    setup.alpha_x = config.guidance.step_size;
    setup.kreg = RegKind::none;
    setup.gt = gt;
    return run_chains(setup, sched, config, rng);
}

SolveResult blind_dps_deblur(const Measurement& y, const ScoreModel& image_model, const ScoreModel& kernel_model,
                             const NoiseSchedule& sched, const SamplerConfig& config, const NoiseStream& rng,
                             const GroundTruth& gt) {
    ChainSetup setup;
    setup.y = &y;
    setup.image = &image_model;
    setup.kmode = KernelMode::diffused;
    setup.kernel = &kernel_model;
    setup.alpha_x = config.guidance.step_size;
    setup.alpha_k = config.guidance.step_size;
    setup.kreg = config.guidance.reg_kind;
    setup.lambda = config.guidance.reg_weight;
    setup.l0_threshold = config.guidance.l0_threshold;
    setup.gt = gt;
    return run_chains(setup, sched, config, rng);
}

SolveResult blind_dps_turbulence(const Measurement& y, const ScoreModel& image_model, const ScoreModel& kernel_model,
                                 const ScoreModel& tilt_model, const NoiseSchedule& sched, const SamplerConfig& config,
                                 const NoiseStream& rng, const GroundTruth& gt, bool freeze_tilt_at_zero) {
    if (freeze_tilt_at_zero) {
        // Pinning the tilt chain to zero removes the warp entirely; delegate to
        // the two-chain solve so the reduction is exact.
        SolveResult r = blind_dps_deblur(y, image_model, kernel_model, sched, config, rng, gt);
        r.phi0 = SignalGrid(image_model.domain_h(), image_model.domain_w(), 2);
        return r;
    }
    ChainSetup setup;
    setup.y = &y;
    setup.image = &image_model;
    setup.kmode = KernelMode::diffused;
    setup.kernel = &kernel_model;
    setup.tilt = &tilt_model;
    setup.alpha_x = config.guidance.step_size;
    setup.alpha_k = config.guidance.step_size;
    setup.alpha_phi = config.guidance.step_size;
    setup.kreg = config.guidance.reg_kind;
    setup.lambda = config.guidance.reg_weight;
    setup.l0_threshold = config.guidance.l0_threshold;
    setup.gt = gt;
    return run_chains(setup, sched, config, rng);
}

SolveResult uniform_prior_baseline(const Measurement& y, const ScoreModel& image_model, const NoiseSchedule& sched,
                                   const UniformBaselineConfig& config, const NoiseStream& rng,
                                   const GroundTruth& gt) {
    if (config.kernel_h != config.kernel_w)
        throw ParameterError("uniform_prior_baseline: only square kernels supported");
    ChainSetup setup;
    setup.y = &y;
    setup.image = &image_model;
    setup.kmode = KernelMode::gradient_only;
    setup.kernel_start = gen_gaussian_kernel(config.sigma_init, config.kernel_h);
    setup.alpha_x = config.alpha_x;
    setup.alpha_k = config.alpha_k;
    setup.kreg = RegKind::l0;
    setup.lambda = config.lambda;
    setup.l0_threshold = config.l0_threshold;
    setup.gt = gt;
    return run_chains(setup, sched, config.sampler, rng);
}

}  // namespace bdps
