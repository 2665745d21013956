#pragma once

#include <vector>

#include "bdps/grid.hpp"

namespace bdps {

/// Discrete variance-preserving (DDPM) noise schedule.
///
/// Steps are indexed i in {1..N} with the convention alpha_bar(0) = 1.
/// post_std(i) is the ancestral posterior standard deviation
/// sqrt(beta_i * (1 - alpha_bar_{i-1}) / (1 - alpha_bar_i)); note it is 0 at i = 1.
class NoiseSchedule {
public:
    NoiseSchedule() = default;
    NoiseSchedule(std::vector<double> betas);

    int n_steps() const { return static_cast<int>(betas_.size()); }
    double beta(int i) const { return betas_[check(i) - 1]; }
    double alpha(int i) const { return alphas_[check(i) - 1]; }
    double alpha_bar(int i) const { return i == 0 ? 1.0 : alpha_bars_[check(i) - 1]; }
    double post_std(int i) const { return post_stds_[check(i) - 1]; }

    const std::vector<double>& betas() const { return betas_; }

private:
    int check(int i) const;

    std::vector<double> betas_;
    std::vector<double> alphas_;
    std::vector<double> alpha_bars_;
    std::vector<double> post_stds_;
};

/// Linearly spaced betas from beta_min to beta_max over n_steps.
/// Defaults (1000, 1e-4, 0.02) drive alpha_bar(N) below 1e-3 so the terminal
/// marginal is indistinguishable from N(0, I).
NoiseSchedule make_schedule(int n_steps, double beta_min = 1e-4, double beta_max = 0.02);

/// Forward noising: sqrt(alpha_bar_i) * x0 + sqrt(1 - alpha_bar_i) * z.
SignalGrid diffuse(const SignalGrid& x0, int i, const SignalGrid& z, const NoiseSchedule& sched);

/// Exact score of p(x_i | x0): -(x_i - sqrt(alpha_bar_i) x0) / (1 - alpha_bar_i).
/// Throws at i = 0 where the conditional is degenerate.
SignalGrid true_conditional_score(const SignalGrid& x_i, const SignalGrid& x0, int i, const NoiseSchedule& sched);

}  // namespace bdps
