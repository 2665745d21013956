#include "bdps/convolve.hpp"

#include <fftw3.h>

#include <complex>
#include <cstring>
#include <map>
#include <mutex>
#include <vector>

#include "bdps/errors.hpp"

namespace bdps {

namespace {

// FFTW plan creation is not thread-safe; execution through fftw_execute_dft_*
// with caller-owned arrays is. Plans are cached per thread and size, created
// under a global mutex, with FFTW_ESTIMATE so the chosen algorithm (and hence
// the exact floating-point result) is reproducible.
std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
}

struct PlanPair {
    fftw_plan fwd = nullptr;
    fftw_plan inv = nullptr;
};

class PlanCache {
public:
    ~PlanCache() {
        std::lock_guard<std::mutex> lock(plan_mutex());
        for (auto& [key, p] : plans_) {
            fftw_destroy_plan(p.fwd);
            fftw_destroy_plan(p.inv);
        }
    }

    PlanPair get(int h, int w) {
        const auto key = std::make_pair(h, w);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;

        std::vector<double> real(static_cast<size_t>(h) * w);
        std::vector<std::complex<double>> freq(static_cast<size_t>(h) * (w / 2 + 1));
        PlanPair p;
        {
            std::lock_guard<std::mutex> lock(plan_mutex());
            p.fwd = fftw_plan_dft_r2c_2d(h, w, real.data(), reinterpret_cast<fftw_complex*>(freq.data()),
                                         FFTW_ESTIMATE);
            p.inv = fftw_plan_dft_c2r_2d(h, w, reinterpret_cast<fftw_complex*>(freq.data()), real.data(),
                                         FFTW_ESTIMATE);
        }
        plans_.emplace(key, p);
        return p;
    }

private:
    std::map<std::pair<int, int>, PlanPair> plans_;
};

PlanCache& cache() {
    thread_local PlanCache c;
    return c;
}

using FreqGrid = std::vector<std::complex<double>>;

FreqGrid fft2(const std::vector<double>& real, int h, int w) {
    PlanPair p = cache().get(h, w);
    std::vector<double> in = real;
    FreqGrid out(static_cast<size_t>(h) * (w / 2 + 1));
    fftw_execute_dft_r2c(p.fwd, in.data(), reinterpret_cast<fftw_complex*>(out.data()));
    return out;
}

std::vector<double> ifft2(const FreqGrid& freq, int h, int w) {
    PlanPair p = cache().get(h, w);
    FreqGrid in = freq;  // c2r destroys its input
    std::vector<double> out(static_cast<size_t>(h) * w);
    fftw_execute_dft_c2r(p.inv, reinterpret_cast<fftw_complex*>(in.data()), out.data());
    const double scale = 1.0 / (static_cast<double>(h) * w);
    for (double& x : out) x *= scale;
    return out;
}

// Kernel embedded into an h x w image grid with its center at the origin.
std::vector<double> embed_kernel(const SignalGrid& k, int h, int w) {
    std::vector<double> out(static_cast<size_t>(h) * w, 0.0);
    const int cr = kernel_center(k.h);
    const int cc = kernel_center(k.w);
    for (int r = 0; r < k.h; ++r) {
        const int ir = ((r - cr) % h + h) % h;
        for (int col = 0; col < k.w; ++col) {
            const int ic = ((col - cc) % w + w) % w;
            out[static_cast<size_t>(ir) * w + ic] += k.at(r, col);
        }
    }
    return out;
}

std::vector<double> channel(const SignalGrid& x, int ch) {
    std::vector<double> out(static_cast<size_t>(x.h) * x.w);
    for (int r = 0; r < x.h; ++r)
        for (int col = 0; col < x.w; ++col) out[static_cast<size_t>(r) * x.w + col] = x.at(r, col, ch);
    return out;
}

void set_channel(SignalGrid& x, int ch, const std::vector<double>& plane) {
    for (int r = 0; r < x.h; ++r)
        for (int col = 0; col < x.w; ++col) x.at(r, col, ch) = plane[static_cast<size_t>(r) * x.w + col];
}

void check_kernel_fits(const SignalGrid& x, const SignalGrid& k, const char* where) {
    if (k.c != 1) throw ShapeError(std::string(where) + ": kernel must be single-channel");
    if (k.h > x.h || k.w > x.w)
        throw ShapeError(std::string(where) + ": kernel " + k.shape_str() + " larger than image " + x.shape_str());
    if (k.h < 1 || k.w < 1) throw ShapeError(std::string(where) + ": empty kernel");
}

}  // namespace

SignalGrid convolve(const SignalGrid& x, const SignalGrid& kernel) {
    check_kernel_fits(x, kernel, "convolve");
    const FreqGrid kf = fft2(embed_kernel(kernel, x.h, x.w), x.h, x.w);
    SignalGrid out(x.h, x.w, x.c);
    for (int ch = 0; ch < x.c; ++ch) {
        FreqGrid xf = fft2(channel(x, ch), x.h, x.w);
        for (size_t j = 0; j < xf.size(); ++j) xf[j] *= kf[j];
        set_channel(out, ch, ifft2(xf, x.h, x.w));
    }
    return out;
}

SignalGrid convolve_adjoint(const SignalGrid& v, const SignalGrid& kernel) {
    check_kernel_fits(v, kernel, "convolve_adjoint");
    const FreqGrid kf = fft2(embed_kernel(kernel, v.h, v.w), v.h, v.w);
    SignalGrid out(v.h, v.w, v.c);
    for (int ch = 0; ch < v.c; ++ch) {
        FreqGrid vf = fft2(channel(v, ch), v.h, v.w);
        for (size_t j = 0; j < vf.size(); ++j) vf[j] *= std::conj(kf[j]);
        set_channel(out, ch, ifft2(vf, v.h, v.w));
    }
    return out;
}

SignalGrid convolve_adjoint_kernel(const SignalGrid& v, const SignalGrid& x, int kh, int kw) {
    require_same_shape(v, x, "convolve_adjoint_kernel");
    if (kh > x.h || kw > x.w || kh < 1 || kw < 1)
        throw ShapeError("convolve_adjoint_kernel: kernel shape does not fit image");
    // Cross-correlation of v with x on the full grid, then read out the
    // entries the kernel embedding touches.
    std::vector<double> corr(static_cast<size_t>(x.h) * x.w, 0.0);
    for (int ch = 0; ch < x.c; ++ch) {
        FreqGrid xf = fft2(channel(x, ch), x.h, x.w);
        FreqGrid vf = fft2(channel(v, ch), v.h, v.w);
        for (size_t j = 0; j < vf.size(); ++j) vf[j] *= std::conj(xf[j]);
        std::vector<double> plane = ifft2(vf, x.h, x.w);
        for (size_t j = 0; j < corr.size(); ++j) corr[j] += plane[j];
    }
    SignalGrid out(kh, kw, 1);
    const int cr = kernel_center(kh);
    const int cc = kernel_center(kw);
    for (int r = 0; r < kh; ++r) {
        const int ir = ((r - cr) % x.h + x.h) % x.h;
        for (int col = 0; col < kw; ++col) {
            const int ic = ((col - cc) % x.w + x.w) % x.w;
            out.at(r, col) = corr[static_cast<size_t>(ir) * x.w + ic];
        }
    }
    return out;
}

}  // namespace bdps
