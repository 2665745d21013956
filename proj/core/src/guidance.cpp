#include "bdps/guidance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "bdps/convolve.hpp"
#include "bdps/errors.hpp"
#include "bdps/warp.hpp"

namespace bdps {

RegKind reg_kind_from_string(const std::string& s) {
    if (s == "none") return RegKind::none;
    if (s == "l1") return RegKind::l1;
    if (s == "l0") return RegKind::l0;
    throw ConfigError("unknown regularizer kind: " + s);
}

std::string to_string(RegKind k) {
    switch (k) {
        case RegKind::none: return "none";
        case RegKind::l1: return "l1";
        case RegKind::l0: return "l0";
    }
    return "?";
}

SignalGrid tweedie_from_score(const SignalGrid& v, const SignalGrid& score, int i, const NoiseSchedule& sched) {
    require_same_shape(v, score, "tweedie_from_score");
    const double ab = sched.alpha_bar(i);
    if (!(ab > 0.0)) throw ParameterError("tweedie: alpha_bar must be > 0");
    const double inv_sqrt = 1.0 / std::sqrt(ab);
    const double coef = 1.0 - ab;
    SignalGrid out = v;
    for (size_t j = 0; j < out.size(); ++j) out.v[j] = (v.v[j] + coef * score.v[j]) * inv_sqrt;
    return out;
}

SignalGrid tweedie_denoise(const ScoreModel& model, const SignalGrid& v, int i, const NoiseSchedule& sched) {
    return tweedie_from_score(v, score_eval(model, v, i, sched), i, sched);
}

SignalGrid project_simplex(const SignalGrid& k) {
    if (!all_finite(k)) throw ParameterError("project_simplex: non-finite input");
    const size_t n = k.size();
    std::vector<double> u(k.v);
    std::sort(u.begin(), u.end(), std::greater<double>());
    double cum = 0.0;
    double theta = 0.0;
    size_t rho = 0;
    for (size_t j = 0; j < n; ++j) {
        cum += u[j];
        const double cand = (cum - 1.0) / static_cast<double>(j + 1);
        if (u[j] - cand > 0.0) {
            rho = j + 1;
            theta = cand;
        }
    }
    // Members of the simplex (up to summation roundoff) pass through
    // unchanged; this makes the projection exactly idempotent.
    double vmin = k.v.empty() ? 0.0 : k.v[0];
    for (double x : k.v) vmin = std::min(vmin, x);
    if (vmin >= 0.0 && std::fabs(theta) <= 1e-13) return k;
    (void)rho;
    SignalGrid out = k;
    for (double& x : out.v) x = std::max(x - theta, 0.0);
    return out;
}

RegTerm regularizer(RegKind kind, const SignalGrid& k, double lambda, double tau) {
    if (lambda < 0.0) throw ParameterError("regularizer: lambda must be >= 0");
    RegTerm t;
    t.descent = zeros_like(k);
    if (lambda == 0.0 || kind == RegKind::none) return t;
    switch (kind) {
        case RegKind::l1: {
            double l1 = 0.0;
            for (size_t j = 0; j < k.size(); ++j) {
                l1 += std::fabs(k.v[j]);
                t.descent.v[j] = k.v[j] > 0.0 ? lambda : (k.v[j] < 0.0 ? -lambda : 0.0);
            }
            t.value = lambda * l1;
            break;
        }
        case RegKind::l0: {
            // No usable gradient; realized as hard_threshold after the step.
            size_t nnz = 0;
            for (double x : k.v)
                if (std::fabs(x) > tau) ++nnz;
            t.value = lambda * static_cast<double>(nnz);
            break;
        }
        case RegKind::none: break;
    }
    return t;
}

void hard_threshold(SignalGrid& k, double threshold) {
    if (threshold <= 0.0) return;
    for (double& x : k.v)
        if (std::fabs(x) <= threshold) x = 0.0;
}

double residual(const Measurement& y, const SignalGrid& x0_hat, const SignalGrid& k0_hat,
                const std::optional<SignalGrid>& phi0_hat) {
    const SignalGrid fit = phi0_hat ? convolve(tilt_warp(x0_hat, *phi0_hat), k0_hat) : convolve(x0_hat, k0_hat);
    require_same_shape(y.grid, fit, "residual");
    double s = 0.0;
    for (size_t j = 0; j < fit.size(); ++j) {
        const double d = y.grid.v[j] - fit.v[j];
        s += d * d;
    }
    return std::sqrt(s);
}

namespace {

// Pulls a cotangent on a Tweedie estimate back to the chain state:
// (g + (1 - ab) * score_vjp(g)) / sqrt(ab).
SignalGrid tweedie_pullback(const ScoreModel& model, const SignalGrid& v_i, int i, const NoiseSchedule& sched,
                            const SignalGrid& g) {
    const double ab = sched.alpha_bar(i);
    SignalGrid out = score_vjp(model, v_i, i, sched, g);
    const double inv_sqrt = 1.0 / std::sqrt(ab);
    for (size_t j = 0; j < out.size(); ++j) out.v[j] = (g.v[j] + (1.0 - ab) * out.v[j]) * inv_sqrt;
    return out;
}

}  // namespace

GuidanceEval guidance_gradients(const Measurement& y, const GuidanceModels& models, const GuidanceStates& states,
                                int i, const NoiseSchedule& sched, const GuidanceConfig& config) {
    if (!models.image || !states.x_i) throw ParameterError("guidance_gradients: image branch is mandatory");
    if (!states.k_i) throw ParameterError("guidance_gradients: kernel state is mandatory");
    if (models.tilt && !states.phi_i) throw ParameterError("guidance_gradients: tilt model without tilt state");

    GuidanceEval ev;
    ev.x0_hat = tweedie_denoise(*models.image, *states.x_i, i, sched);
    ev.k0_hat = models.kernel ? tweedie_denoise(*models.kernel, *states.k_i, i, sched) : *states.k_i;
    if (models.kernel && config.project_kernel) ev.k0_hat = project_simplex(ev.k0_hat);
    if (states.phi_i)
        ev.phi0_hat = models.tilt ? tweedie_denoise(*models.tilt, *states.phi_i, i, sched) : *states.phi_i;

    const SignalGrid warped = ev.phi0_hat ? tilt_warp(ev.x0_hat, *ev.phi0_hat) : ev.x0_hat;
    const SignalGrid fit = convolve(warped, ev.k0_hat);
    require_same_shape(y.grid, fit, "guidance_gradients");

    SignalGrid err = sub(fit, y.grid);
    double r = norm2(err);
    ev.residual_value = r;

    ev.grad_x = zeros_like(*states.x_i);
    ev.grad_k = zeros_like(*states.k_i);
    if (models.tilt) ev.grad_phi = zeros_like(*states.phi_i);

    const bool guarded = !config.squared_residual && r < config.residual_guard;
    if (!guarded) {
        // Direction on the forward fit: d loss / d fit.
        SignalGrid dir = err;
        if (config.squared_residual) {
            const double s2 = config.measurement_sigma * config.measurement_sigma;
            if (!(s2 > 0.0)) throw ParameterError("guidance_gradients: squared variant needs sigma > 0");
            for (double& x : dir.v) x /= s2;
        } else {
            for (double& x : dir.v) x /= r;
        }

        const SignalGrid g_warped = convolve_adjoint(dir, ev.k0_hat);
        SignalGrid g_k = convolve_adjoint_kernel(dir, warped, states.k_i->h, states.k_i->w);

        if (ev.phi0_hat) {
            ev.grad_x = tweedie_pullback(*models.image, *states.x_i, i, sched,
                                         tilt_warp_adjoint(g_warped, *ev.phi0_hat));
            if (models.tilt)
                ev.grad_phi = tweedie_pullback(*models.tilt, *states.phi_i, i, sched,
                                               tilt_warp_vjp_phi(g_warped, ev.x0_hat, *ev.phi0_hat));
        } else {
            ev.grad_x = tweedie_pullback(*models.image, *states.x_i, i, sched, g_warped);
        }

        if (models.kernel) {
            const RegTerm reg = regularizer(config.reg_kind, ev.k0_hat, config.reg_weight, config.l0_threshold);
            axpy(1.0, reg.descent, g_k);
            // Projection treated as identity (straight-through).
            ev.grad_k = tweedie_pullback(*models.kernel, *states.k_i, i, sched, g_k);
        }

        if (!all_finite(ev.grad_x) || !all_finite(ev.grad_k) || (ev.grad_phi && !all_finite(*ev.grad_phi)))
            throw DivergenceError("guidance_gradients: non-finite gradient at step " + std::to_string(i), i);
    }
    return ev;
}

}  // namespace bdps
