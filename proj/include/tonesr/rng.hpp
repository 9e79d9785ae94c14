#pragma once

#include <cstdint>
#include <cmath>
#include <string>

#include "tonesr/common.hpp"

namespace tonesr {

// Deterministic generator with hand-rolled distributions so that streams are
// bit-identical across standard libraries and platforms. All randomness in
// the toolkit flows from one top-level seed through named substreams.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {
        // warm up splitmix so nearby seeds decorrelate
        next_u64();
        next_u64();
    }

    // Named substream: rng for one module/sample, independent of call order.
    static Rng stream(uint64_t seed, const std::string& name, uint64_t index = 0) {
        uint64_t h = fnv1a64(name);
        h = fnv1a64(&index, sizeof(index), h);
        h = fnv1a64(&seed, sizeof(seed), h);
        return Rng(h);
    }

    uint64_t next_u64() {
        // splitmix64
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    uint32_t next_u32() { return static_cast<uint32_t>(next_u64() >> 32); }

    // uniform in [0, n)
    uint64_t uniform_int(uint64_t n) {
        if (n == 0) return 0;
        // rejection-free Lemire reduction; bias < 2^-64, irrelevant here
        return static_cast<uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    int range(int lo, int hi_inclusive) {
        return lo + static_cast<int>(uniform_int(static_cast<uint64_t>(hi_inclusive - lo + 1)));
    }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    float uniform_f(float lo, float hi) { return static_cast<float>(uniform(lo, hi)); }

    bool chance(double p) { return uniform() < p; }

    // Box-Muller; deterministic, no cached spare to keep the stream simple.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

private:
    uint64_t state_;
};

}  // namespace tonesr
