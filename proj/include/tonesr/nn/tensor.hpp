#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace tonesr::nn {

// Dense NCHW float tensor.
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<float> v;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_) { reshape(n_, c_, h_, w_); }

    void reshape(int n_, int c_, int h_, int w_) {
        n = n_;
        c = c_;
        h = h_;
        w = w_;
        v.assign(numel(), 0.f);
    }
    // resize without clearing when the element count already matches
    void reshape_keep(int n_, int c_, int h_, int w_) {
        const size_t want = static_cast<size_t>(n_) * c_ * h_ * w_;
        if (v.size() != want) v.resize(want);
        n = n_;
        c = c_;
        h = h_;
        w = w_;
    }
    size_t numel() const { return static_cast<size_t>(n) * c * h * w; }
    size_t plane() const { return static_cast<size_t>(h) * w; }
    float* data() { return v.data(); }
    const float* data() const { return v.data(); }
    void zero() { std::fill(v.begin(), v.end(), 0.f); }

    float& at(int ni, int ci, int yi, int xi) {
        return v[((static_cast<size_t>(ni) * c + ci) * h + yi) * w + xi];
    }
    float at(int ni, int ci, int yi, int xi) const {
        return v[((static_cast<size_t>(ni) * c + ci) * h + yi) * w + xi];
    }
};

inline void check_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (a.n != b.n || a.c != b.c || a.h != b.h || a.w != b.w)
        throw std::invalid_argument(std::string(what) + ": tensor shape mismatch");
}

}  // namespace tonesr::nn
