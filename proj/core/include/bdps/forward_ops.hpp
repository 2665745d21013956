#pragma once

#include <optional>

#include "bdps/grid.hpp"
#include "bdps/rng.hpp"

namespace bdps {

/// Corrupted measurement y together with the noise level that produced it.
struct Measurement {
    SignalGrid grid;
    double noise_std = 0.0;
};

/// y = k (*) x + n, or k (*) T_phi(x) + n when a tilt field is given.
/// Noise is iid N(0, sigma^2), drawn from the stream (deterministic in seed).
Measurement degrade(const SignalGrid& x, const SignalGrid& kernel, const std::optional<SignalGrid>& phi,
                    double sigma, NoiseStream& rng);

/// Isotropic Gaussian kernel on a size x size grid, peak at the center pixel
/// (the same pixel the convolution maps to the image origin), normalized to sum 1.
SignalGrid gen_gaussian_kernel(double std_dev, int size);

/// Random motion-blur kernel: a jittered random-walk of control points is
/// spline-interpolated and stamped onto the grid with anti-aliased bilinear
/// splats, then normalized to sum 1. intensity in [0, 1] scales both the
/// directional jitter and the trajectory length; intensity 0 degenerates to a
/// short straight segment.
SignalGrid gen_motion_kernel(double intensity, int size, NoiseStream& rng);

/// Smooth random tilt field: iid N(0,1) 2-vectors on a grid_n x grid_n lattice,
/// Gaussian-smoothed with smooth_std (lattice units), bilinearly upsampled to
/// out_h x out_w, and rescaled so the largest displacement magnitude equals
/// amplitude (pixels). amplitude 0 gives the zero field.
SignalGrid gen_tilt_field(int grid_n, double smooth_std, double amplitude, int out_h, int out_w, NoiseStream& rng);

}  // namespace bdps
