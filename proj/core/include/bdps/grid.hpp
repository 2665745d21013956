#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "bdps/errors.hpp"

namespace bdps {

/// Dense real-valued tensor with shape metadata: image (H x W x C),
/// kernel (h x w, c=1), tilt field (H x W x 2), or a flat vector (1 x d x 1).
/// Data is row-major with the channel as the fastest axis.
struct SignalGrid {
    int h = 0;
    int w = 0;
    int c = 1;
    std::vector<double> v;

    SignalGrid() = default;
    SignalGrid(int h_, int w_, int c_ = 1) : h(h_), w(w_), c(c_), v(static_cast<size_t>(h_) * w_ * c_, 0.0) {}

    static SignalGrid vec(int d) { return SignalGrid(1, d, 1); }

    size_t size() const { return v.size(); }
    bool same_shape(const SignalGrid& o) const { return h == o.h && w == o.w && c == o.c; }
    std::string shape_str() const {
        return std::to_string(h) + "x" + std::to_string(w) + "x" + std::to_string(c);
    }

    double& at(int r, int col, int ch = 0) { return v[(static_cast<size_t>(r) * w + col) * c + ch]; }
    double at(int r, int col, int ch = 0) const { return v[(static_cast<size_t>(r) * w + col) * c + ch]; }

    double& operator[](size_t i) { return v[i]; }
    double operator[](size_t i) const { return v[i]; }
};

inline void require_same_shape(const SignalGrid& a, const SignalGrid& b, const char* where) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(where) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

inline SignalGrid zeros_like(const SignalGrid& a) { return SignalGrid(a.h, a.w, a.c); }

inline double dot(const SignalGrid& a, const SignalGrid& b) {
    require_same_shape(a, b, "dot");
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a.v[i] * b.v[i];
    return s;
}

inline double norm2(const SignalGrid& a) {
    double s = 0.0;
    for (double x : a.v) s += x * x;
    return std::sqrt(s);
}

inline double max_abs(const SignalGrid& a) {
    double m = 0.0;
    for (double x : a.v) m = std::max(m, std::fabs(x));
    return m;
}

inline bool all_finite(const SignalGrid& a) {
    for (double x : a.v)
        if (!std::isfinite(x)) return false;
    return true;
}

inline SignalGrid scaled(const SignalGrid& a, double s) {
    SignalGrid r = a;
    for (double& x : r.v) x *= s;
    return r;
}

inline SignalGrid add(const SignalGrid& a, const SignalGrid& b) {
    require_same_shape(a, b, "add");
    SignalGrid r = a;
    for (size_t i = 0; i < r.size(); ++i) r.v[i] += b.v[i];
    return r;
}

inline SignalGrid sub(const SignalGrid& a, const SignalGrid& b) {
    require_same_shape(a, b, "sub");
    SignalGrid r = a;
    for (size_t i = 0; i < r.size(); ++i) r.v[i] -= b.v[i];
    return r;
}

// y += s * x
inline void axpy(double s, const SignalGrid& x, SignalGrid& y) {
    require_same_shape(x, y, "axpy");
    for (size_t i = 0; i < y.size(); ++i) y.v[i] += s * x.v[i];
}

inline double mean_sq_diff(const SignalGrid& a, const SignalGrid& b) {
    require_same_shape(a, b, "mean_sq_diff");
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = a.v[i] - b.v[i];
        s += d * d;
    }
    return s / static_cast<double>(a.size());
}

}  // namespace bdps
