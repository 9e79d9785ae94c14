#pragma once

#include "tonesr/nn/tensor.hpp"
#include "tonesr/raster.hpp"
#include "tonesr/rng.hpp"

namespace tonesr::testutil {

inline nn::Tensor rand_tensor(int n, int c, int h, int w, Rng& rng, float lo = -1.f,
                              float hi = 1.f) {
    nn::Tensor t(n, c, h, w);
    for (auto& v : t.v) v = rng.uniform_f(lo, hi);
    return t;
}

inline Raster rand_raster(int w, int h, Rng& rng) {
    Raster r(w, h);
    for (auto& p : r.pixels) p = static_cast<uint8_t>(rng.uniform_int(256));
    return r;
}

inline double max_abs_diff(const nn::Tensor& a, const nn::Tensor& b) {
    double m = 0;
    for (size_t i = 0; i < a.numel(); ++i)
        m = std::max(m, std::abs(static_cast<double>(a.v[i]) - b.v[i]));
    return m;
}

}  // namespace tonesr::testutil
