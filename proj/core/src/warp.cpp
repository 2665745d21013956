#include "bdps/warp.hpp"

#include <algorithm>
#include <cmath>

#include "bdps/errors.hpp"

namespace bdps {

namespace {

struct Tap {
    int r0, r1, c0, c1;
    double fr, fc;    // fractional parts
    bool clamped_r, clamped_c;
};

void check_phi(const SignalGrid& x, const SignalGrid& phi, const char* where) {
    if (phi.c != 2 || phi.h != x.h || phi.w != x.w)
        throw ShapeError(std::string(where) + ": tilt field must be " + std::to_string(x.h) + "x" +
                         std::to_string(x.w) + "x2, got " + phi.shape_str());
    if (!all_finite(phi)) throw ParameterError(std::string(where) + ": non-finite displacement");
}

Tap make_tap(double sr, double sc, int h, int w) {
    Tap t;
    t.clamped_r = sr <= 0.0 || sr >= h - 1;
    t.clamped_c = sc <= 0.0 || sc >= w - 1;
    sr = std::clamp(sr, 0.0, static_cast<double>(h - 1));
    sc = std::clamp(sc, 0.0, static_cast<double>(w - 1));
    t.r0 = std::min(static_cast<int>(sr), h - 2 < 0 ? 0 : h - 2);
    t.c0 = std::min(static_cast<int>(sc), w - 2 < 0 ? 0 : w - 2);
    t.r1 = std::min(t.r0 + 1, h - 1);
    t.c1 = std::min(t.c0 + 1, w - 1);
    t.fr = sr - t.r0;
    t.fc = sc - t.c0;
    return t;
}

}  // namespace

SignalGrid tilt_warp(const SignalGrid& x, const SignalGrid& phi) {
    check_phi(x, phi, "tilt_warp");
    SignalGrid out(x.h, x.w, x.c);
    for (int r = 0; r < x.h; ++r) {
        for (int col = 0; col < x.w; ++col) {
            const double sc = col + phi.at(r, col, 0);
            const double sr = r + phi.at(r, col, 1);
            const Tap t = make_tap(sr, sc, x.h, x.w);
            const double w00 = (1.0 - t.fr) * (1.0 - t.fc);
            const double w01 = (1.0 - t.fr) * t.fc;
            const double w10 = t.fr * (1.0 - t.fc);
            const double w11 = t.fr * t.fc;
            for (int ch = 0; ch < x.c; ++ch) {
                out.at(r, col, ch) = w00 * x.at(t.r0, t.c0, ch) + w01 * x.at(t.r0, t.c1, ch) +
                                     w10 * x.at(t.r1, t.c0, ch) + w11 * x.at(t.r1, t.c1, ch);
            }
        }
    }
    return out;
}

SignalGrid tilt_warp_adjoint(const SignalGrid& v, const SignalGrid& phi) {
    check_phi(v, phi, "tilt_warp_adjoint");
    SignalGrid out(v.h, v.w, v.c);
    for (int r = 0; r < v.h; ++r) {
        for (int col = 0; col < v.w; ++col) {
            const double sc = col + phi.at(r, col, 0);
            const double sr = r + phi.at(r, col, 1);
            const Tap t = make_tap(sr, sc, v.h, v.w);
            const double w00 = (1.0 - t.fr) * (1.0 - t.fc);
            const double w01 = (1.0 - t.fr) * t.fc;
            const double w10 = t.fr * (1.0 - t.fc);
            const double w11 = t.fr * t.fc;
            for (int ch = 0; ch < v.c; ++ch) {
                const double g = v.at(r, col, ch);
                out.at(t.r0, t.c0, ch) += w00 * g;
                out.at(t.r0, t.c1, ch) += w01 * g;
                out.at(t.r1, t.c0, ch) += w10 * g;
                out.at(t.r1, t.c1, ch) += w11 * g;
            }
        }
    }
    return out;
}

SignalGrid tilt_warp_vjp_phi(const SignalGrid& cotangent, const SignalGrid& x, const SignalGrid& phi) {
    require_same_shape(cotangent, x, "tilt_warp_vjp_phi");
    check_phi(x, phi, "tilt_warp_vjp_phi");
    SignalGrid out(x.h, x.w, 2);
    for (int r = 0; r < x.h; ++r) {
        for (int col = 0; col < x.w; ++col) {
            const double sc = col + phi.at(r, col, 0);
            const double sr = r + phi.at(r, col, 1);
            const Tap t = make_tap(sr, sc, x.h, x.w);
            double gc = 0.0, gr = 0.0;
            for (int ch = 0; ch < x.c; ++ch) {
                const double g = cotangent.at(r, col, ch);
                // d sample / d column shift: interpolate the horizontal difference
                if (!t.clamped_c) {
                    gc += g * ((1.0 - t.fr) * (x.at(t.r0, t.c1, ch) - x.at(t.r0, t.c0, ch)) +
                               t.fr * (x.at(t.r1, t.c1, ch) - x.at(t.r1, t.c0, ch)));
                }
                if (!t.clamped_r) {
                    gr += g * ((1.0 - t.fc) * (x.at(t.r1, t.c0, ch) - x.at(t.r0, t.c0, ch)) +
                               t.fc * (x.at(t.r1, t.c1, ch) - x.at(t.r0, t.c1, ch)));
                }
            }
            out.at(r, col, 0) = gc;
            out.at(r, col, 1) = gr;
        }
    }
    return out;
}

}  // namespace bdps
