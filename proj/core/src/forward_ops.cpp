#include "bdps/forward_ops.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "bdps/convolve.hpp"
#include "bdps/errors.hpp"
#include "bdps/warp.hpp"

namespace bdps {

Measurement degrade(const SignalGrid& x, const SignalGrid& kernel, const std::optional<SignalGrid>& phi,
                    double sigma, NoiseStream& rng) {
    if (sigma < 0.0) throw ParameterError("degrade: sigma must be >= 0");
    Measurement m;
    m.noise_std = sigma;
    m.grid = phi ? convolve(tilt_warp(x, *phi), kernel) : convolve(x, kernel);
    if (sigma > 0.0) {
        for (double& v : m.grid.v) v += sigma * rng.normal();
    }
    return m;
}

SignalGrid gen_gaussian_kernel(double std_dev, int size) {
    if (!(std_dev > 0.0)) throw ParameterError("gen_gaussian_kernel: std must be > 0");
    if (size < 1) throw ParameterError("gen_gaussian_kernel: size must be >= 1");
    SignalGrid k(size, size, 1);
    const int cr = kernel_center(size);
    const int cc = kernel_center(size);
    const double inv2v = 1.0 / (2.0 * std_dev * std_dev);
    double sum = 0.0;
    for (int r = 0; r < size; ++r) {
        for (int c = 0; c < size; ++c) {
            const double d2 = (r - cr) * double(r - cr) + (c - cc) * double(c - cc);
            k.at(r, c) = std::exp(-d2 * inv2v);
            sum += k.at(r, c);
        }
    }
    for (double& v : k.v) v /= sum;
    return k;
}

namespace {

// Anti-aliased point stamp: bilinear splat of unit mass at (r, c).
void splat(SignalGrid& k, double r, double c, double mass) {
    const int r0 = static_cast<int>(std::floor(r));
    const int c0 = static_cast<int>(std::floor(c));
    const double fr = r - r0;
    const double fc = c - c0;
    const double w[4] = {(1 - fr) * (1 - fc), (1 - fr) * fc, fr * (1 - fc), fr * fc};
    const int rr[4] = {r0, r0, r0 + 1, r0 + 1};
    const int cc[4] = {c0, c0 + 1, c0, c0 + 1};
    for (int j = 0; j < 4; ++j) {
        if (rr[j] >= 0 && rr[j] < k.h && cc[j] >= 0 && cc[j] < k.w) k.at(rr[j], cc[j]) += mass * w[j];
    }
}

// Centripetal-free Catmull-Rom through p1..p2 with neighbors p0, p3.
double catmull_rom(double p0, double p1, double p2, double p3, double t) {
    const double t2 = t * t;
    const double t3 = t2 * t;
    return 0.5 * ((2.0 * p1) + (-p0 + p2) * t + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2 +
                  (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * t3);
}

}  // namespace

SignalGrid gen_motion_kernel(double intensity, int size, NoiseStream& rng) {
    if (intensity < 0.0 || intensity > 1.0) throw ParameterError("gen_motion_kernel: intensity outside [0, 1]");
    if (size < 1) throw ParameterError("gen_motion_kernel: size must be >= 1");
    if (size == 1) {
        SignalGrid k(1, 1, 1);
        k.at(0, 0) = 1.0;
        return k;
    }

    const int n_ctrl = 6;
    const double path_len = (size - 1) * (0.25 + 0.55 * intensity);
    const double step = path_len / (n_ctrl - 1);

    std::vector<double> cr(n_ctrl), cc(n_ctrl);
    double r = 0.0, c = 0.0;
    double theta = rng.uniform() * 2.0 * M_PI;
    cr[0] = r;
    cc[0] = c;
    for (int j = 1; j < n_ctrl; ++j) {
        theta += intensity * rng.normal() * (M_PI / 2.0);
        const double len = step * (1.0 + 0.4 * intensity * rng.normal());
        r += len * std::sin(theta);
        c += len * std::cos(theta);
        cr[j] = r;
        cc[j] = c;
    }

    // Recenter the trajectory's bounding box onto the grid.
    const auto [rmin, rmax] = std::minmax_element(cr.begin(), cr.end());
    const auto [cmin, cmax] = std::minmax_element(cc.begin(), cc.end());
    const double roff = (size - 1) / 2.0 - 0.5 * (*rmin + *rmax);
    const double coff = (size - 1) / 2.0 - 0.5 * (*cmin + *cmax);
    for (int j = 0; j < n_ctrl; ++j) {
        cr[j] = std::clamp(cr[j] + roff, 0.0, size - 1.0);
        cc[j] = std::clamp(cc[j] + coff, 0.0, size - 1.0);
    }

    SignalGrid k(size, size, 1);
    const int samples_per_seg = 48;
    for (int seg = 0; seg + 1 < n_ctrl; ++seg) {
        const int i0 = std::max(seg - 1, 0);
        const int i3 = std::min(seg + 2, n_ctrl - 1);
        for (int s = 0; s < samples_per_seg; ++s) {
            const double t = (s + 0.5) / samples_per_seg;
            const double pr = catmull_rom(cr[i0], cr[seg], cr[seg + 1], cr[i3], t);
            const double pc = catmull_rom(cc[i0], cc[seg], cc[seg + 1], cc[i3], t);
            splat(k, std::clamp(pr, 0.0, size - 1.0), std::clamp(pc, 0.0, size - 1.0), 1.0);
        }
    }

    double sum = 0.0;
    for (double v : k.v) sum += v;
    for (double& v : k.v) v /= sum;
    return k;
}

SignalGrid gen_tilt_field(int grid_n, double smooth_std, double amplitude, int out_h, int out_w, NoiseStream& rng) {
    if (grid_n < 2) throw ParameterError("gen_tilt_field: grid_n must be >= 2");
    SignalGrid coarse(grid_n, grid_n, 2);
    rng.fill_normal(coarse);

    if (smooth_std > 0.0) {
        // Separable truncated-Gaussian smoothing with edge clamp.
        const int rad = std::max(1, static_cast<int>(std::ceil(3.0 * smooth_std)));
        std::vector<double> taps(2 * rad + 1);
        double tsum = 0.0;
        for (int j = -rad; j <= rad; ++j) {
            taps[j + rad] = std::exp(-0.5 * j * j / (smooth_std * smooth_std));
            tsum += taps[j + rad];
        }
        for (double& t : taps) t /= tsum;

        SignalGrid tmp(grid_n, grid_n, 2);
        for (int r = 0; r < grid_n; ++r)
            for (int c = 0; c < grid_n; ++c)
                for (int ch = 0; ch < 2; ++ch) {
                    double acc = 0.0;
                    for (int j = -rad; j <= rad; ++j)
                        acc += taps[j + rad] * coarse.at(r, std::clamp(c + j, 0, grid_n - 1), ch);
                    tmp.at(r, c, ch) = acc;
                }
        for (int r = 0; r < grid_n; ++r)
            for (int c = 0; c < grid_n; ++c)
                for (int ch = 0; ch < 2; ++ch) {
                    double acc = 0.0;
                    for (int j = -rad; j <= rad; ++j)
                        acc += taps[j + rad] * tmp.at(std::clamp(r + j, 0, grid_n - 1), c, ch);
                    coarse.at(r, c, ch) = acc;
                }
    }

    // Bilinear upsample onto the output grid.
    SignalGrid field(out_h, out_w, 2);
    for (int r = 0; r < out_h; ++r) {
        for (int c = 0; c < out_w; ++c) {
            const double gr = out_h > 1 ? static_cast<double>(r) * (grid_n - 1) / (out_h - 1) : 0.0;
            const double gc = out_w > 1 ? static_cast<double>(c) * (grid_n - 1) / (out_w - 1) : 0.0;
            const int r0 = std::min(static_cast<int>(gr), grid_n - 2);
            const int c0 = std::min(static_cast<int>(gc), grid_n - 2);
            const double fr = gr - r0;
            const double fc = gc - c0;
            for (int ch = 0; ch < 2; ++ch) {
                field.at(r, c, ch) = (1 - fr) * (1 - fc) * coarse.at(r0, c0, ch) +
                                     (1 - fr) * fc * coarse.at(r0, c0 + 1, ch) +
                                     fr * (1 - fc) * coarse.at(r0 + 1, c0, ch) +
                                     fr * fc * coarse.at(r0 + 1, c0 + 1, ch);
            }
        }
    }

    double max_mag = 0.0;
    for (int r = 0; r < out_h; ++r)
        for (int c = 0; c < out_w; ++c)
            max_mag = std::max(max_mag, std::hypot(field.at(r, c, 0), field.at(r, c, 1)));
    const double scale = (amplitude == 0.0 || max_mag == 0.0) ? 0.0 : amplitude / max_mag;
    for (double& v : field.v) v *= scale;
    return field;
}

}  // namespace bdps
