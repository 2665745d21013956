#pragma once

#include <cmath>
#include <cstdint>

#include "bdps/grid.hpp"

namespace bdps {

// Counter-based random streams (Philox4x32-10).
//
// Every draw is a pure function of (seed, stream, counter), so results are
// identical across platforms and across any degree of parallelism. Sub-stream
// derivation: run seed -> branch/stream id -> per-draw counter. Branches of a
// solve (image = 0, kernel = 1, tilt = 2, initial states at 16 + branch,
// measurement noise at 32) draw from disjoint streams, so evaluation order
// between branches never changes the numbers.

namespace detail {

inline void philox_round(uint32_t& c0, uint32_t& c1, uint32_t& c2, uint32_t& c3, uint32_t k0, uint32_t k1) {
    const uint64_t m0 = 0xD2511F53ull * c0;
    const uint64_t m1 = 0xCD9E8D57ull * c2;
    const uint32_t hi0 = static_cast<uint32_t>(m0 >> 32), lo0 = static_cast<uint32_t>(m0);
    const uint32_t hi1 = static_cast<uint32_t>(m1 >> 32), lo1 = static_cast<uint32_t>(m1);
    c0 = hi1 ^ c1 ^ k0;
    c1 = lo1;
    c2 = hi0 ^ c3 ^ k1;
    c3 = lo0;
}

// One Philox4x32-10 block: 128-bit counter, 64-bit key -> 128 output bits.
inline void philox4x32(uint64_t ctr_hi, uint64_t ctr_lo, uint64_t key, uint32_t out[4]) {
    uint32_t c0 = static_cast<uint32_t>(ctr_lo);
    uint32_t c1 = static_cast<uint32_t>(ctr_lo >> 32);
    uint32_t c2 = static_cast<uint32_t>(ctr_hi);
    uint32_t c3 = static_cast<uint32_t>(ctr_hi >> 32);
    uint32_t k0 = static_cast<uint32_t>(key);
    uint32_t k1 = static_cast<uint32_t>(key >> 32);
    for (int round = 0; round < 10; ++round) {
        philox_round(c0, c1, c2, c3, k0, k1);
        k0 += 0x9E3779B9u;
        k1 += 0xBB67AE85u;
    }
    out[0] = c0;
    out[1] = c1;
    out[2] = c2;
    out[3] = c3;
}

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

}  // namespace detail

class NoiseStream {
public:
    NoiseStream() = default;
    NoiseStream(uint64_t seed, uint64_t stream = 0)
        : seed_(seed), stream_(detail::splitmix64(seed ^ detail::splitmix64(stream))) {}

    /// Child stream with an independent counter; deterministic in (parent, id).
    NoiseStream derive(uint64_t substream_id) const {
        NoiseStream s;
        s.seed_ = seed_;
        s.stream_ = detail::splitmix64(stream_ ^ detail::splitmix64(substream_id + 0x517CC1B727220A95ull));
        return s;
    }

    uint64_t seed() const { return seed_; }

    uint64_t next_u64() {
        if (block_pos_ >= 2) refill();
        return block_u64_[block_pos_++];
    }

    /// Uniform on (0, 1]; never returns 0 so log() stays finite.
    double uniform() {
        const uint64_t u = next_u64() >> 11;  // 53 bits
        return (static_cast<double>(u) + 1.0) * 0x1.0p-53;
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    void fill_normal(SignalGrid& g) {
        for (double& x : g.v) x = normal();
    }

    SignalGrid normal_grid(int h, int w, int c = 1) {
        SignalGrid g(h, w, c);
        fill_normal(g);
        return g;
    }

private:
    void refill() {
        uint32_t out[4];
        detail::philox4x32(stream_, counter_++, seed_, out);
        block_u64_[0] = (static_cast<uint64_t>(out[1]) << 32) | out[0];
        block_u64_[1] = (static_cast<uint64_t>(out[3]) << 32) | out[2];
        block_pos_ = 0;
    }

    uint64_t seed_ = 0;
    uint64_t stream_ = 0;
    uint64_t counter_ = 0;
    uint64_t block_u64_[2] = {0, 0};
    int block_pos_ = 2;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace bdps
