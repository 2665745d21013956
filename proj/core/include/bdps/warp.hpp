#pragma once

#include "bdps/grid.hpp"

namespace bdps {

// Tilt warp: out(p) = bilinear sample of x at p + phi(p), with edge-clamped
// boundaries. phi is H x W x 2 holding (dx, dy) displacements in pixels;
// channel 0 shifts columns, channel 1 shifts rows. The map is exactly linear
// in x for fixed phi.

SignalGrid tilt_warp(const SignalGrid& x, const SignalGrid& phi);

/// Adjoint of x -> tilt_warp(x, phi): scatters the cotangent back through the
/// bilinear weights. <tilt_warp(x,phi), v> == <x, tilt_warp_adjoint(v,phi)>.
SignalGrid tilt_warp_adjoint(const SignalGrid& v, const SignalGrid& phi);

/// VJP with respect to phi: returns an H x W x 2 grid whose entry (p, *) is
/// cot(p) contracted with d sample / d (dx, dy) at p (summed over channels).
/// Zero where the sample point is clamped to the border.
SignalGrid tilt_warp_vjp_phi(const SignalGrid& cotangent, const SignalGrid& x, const SignalGrid& phi);

}  // namespace bdps
