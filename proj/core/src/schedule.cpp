#include "bdps/schedule.hpp"

#include <cmath>
#include <string>

#include "bdps/errors.hpp"

namespace bdps {

NoiseSchedule::NoiseSchedule(std::vector<double> betas) : betas_(std::move(betas)) {
    if (betas_.empty()) throw ParameterError("schedule: need at least one step");
    const size_t n = betas_.size();
    alphas_.resize(n);
    alpha_bars_.resize(n);
    post_stds_.resize(n);
    double bar = 1.0;
    for (size_t j = 0; j < n; ++j) {
        const double b = betas_[j];
        if (!(b > 0.0 && b < 1.0))
            throw ParameterError("schedule: beta_" + std::to_string(j + 1) + " = " + std::to_string(b) +
                                 " outside (0, 1)");
        const double prev_bar = bar;
        alphas_[j] = 1.0 - b;
        bar *= alphas_[j];
        alpha_bars_[j] = bar;
        post_stds_[j] = std::sqrt(b * (1.0 - prev_bar) / (1.0 - bar));
    }
}

int NoiseSchedule::check(int i) const {
    if (i < 1 || i > n_steps())
        throw ParameterError("schedule: step index " + std::to_string(i) + " outside [1, " +
                             std::to_string(n_steps()) + "]");
    return i;
}

NoiseSchedule make_schedule(int n_steps, double beta_min, double beta_max) {
    if (n_steps < 1) throw ParameterError("make_schedule: n_steps must be >= 1");
    if (!(beta_min > 0.0 && beta_min <= beta_max && beta_max < 1.0))
        throw ParameterError("make_schedule: need 0 < beta_min <= beta_max < 1");
    std::vector<double> betas(n_steps);
    if (n_steps == 1) {
        betas[0] = beta_min;
    } else {
        const double step = (beta_max - beta_min) / (n_steps - 1);
        for (int j = 0; j < n_steps; ++j) betas[j] = beta_min + step * j;
    }
    return NoiseSchedule(std::move(betas));
}

SignalGrid diffuse(const SignalGrid& x0, int i, const SignalGrid& z, const NoiseSchedule& sched) {
    require_same_shape(x0, z, "diffuse");
    const double ab = sched.alpha_bar(i);
    const double s = std::sqrt(ab);
    const double t = std::sqrt(1.0 - ab);
    SignalGrid out = x0;
    for (size_t j = 0; j < out.size(); ++j) out.v[j] = s * x0.v[j] + t * z.v[j];
    return out;
}

SignalGrid true_conditional_score(const SignalGrid& x_i, const SignalGrid& x0, int i, const NoiseSchedule& sched) {
    require_same_shape(x_i, x0, "true_conditional_score");
    const double ab = sched.alpha_bar(i);
    if (ab >= 1.0) throw ParameterError("true_conditional_score: degenerate step (alpha_bar = 1)");
    const double s = std::sqrt(ab);
    const double inv_var = 1.0 / (1.0 - ab);
    SignalGrid out = x_i;
    for (size_t j = 0; j < out.size(); ++j) out.v[j] = -(x_i.v[j] - s * x0.v[j]) * inv_var;
    return out;
}

}  // namespace bdps
