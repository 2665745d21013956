#pragma once

#include <optional>

#include "bdps/grid.hpp"
#include "bdps/sampler.hpp"

namespace bdps {

/// Maximum of normalized cross-correlation over all circular shifts; shift-
/// and scale-invariant kernel fidelity in [-1, 1]. Size mismatches are
/// reconciled by centered zero-padding the smaller grid (flagged in reports).
double mnc(const SignalGrid& k_est, const SignalGrid& k_true);

double mse(const SignalGrid& a, const SignalGrid& b);

/// 10 log10(peak^2 / mse); +infinity when mse is 0. The peak comes from the
/// declared data range (2.0 for [-1, 1] signals), never from the data.
double psnr(const SignalGrid& x_est, const SignalGrid& x_true, double peak = 2.0);

struct MetricReport {
    double psnr = 0.0;
    double mse_image = 0.0;
    double mse_kernel = 0.0;
    double mnc = 0.0;
    bool kernel_padded = false;  // shapes differed and zero-padding was applied
    std::optional<int> argmin_kernel_mse_step;
    double final_residual = 0.0;
    double peak = 2.0;
};

/// Scores a solve against ground truth; trajectory summaries come from the
/// result's snapshots.
MetricReport evaluate_solve(const SolveResult& result, const SignalGrid& x_true, const SignalGrid& k_true,
                            double peak = 2.0);

}  // namespace bdps
