#pragma once

#include "bdps/grid.hpp"

namespace bdps {

// Circular (periodic) 2-D convolution in the frequency domain. The kernel is
// zero-padded to the image size with its center pixel (ceil(h/2)-1,
// ceil(w/2)-1) placed at the image origin before the product, so a delta
// kernel is the identity. Multi-channel images convolve per channel with the
// shared kernel.

/// y = kernel (*) x; output shape equals x. Kernel must fit inside the image.
SignalGrid convolve(const SignalGrid& x, const SignalGrid& kernel);

/// Adjoint in the image argument: <convolve(x,k), v> == <x, convolve_adjoint(v,k)>.
SignalGrid convolve_adjoint(const SignalGrid& v, const SignalGrid& kernel);

/// Adjoint in the kernel argument: <convolve(x,k), v> == <k, convolve_adjoint_kernel(v,x,kh,kw)>.
SignalGrid convolve_adjoint_kernel(const SignalGrid& v, const SignalGrid& x, int kh, int kw);

/// Row/col of the kernel entry that lands on the image origin.
inline int kernel_center(int extent) { return (extent + 1) / 2 - 1; }

}  // namespace bdps
