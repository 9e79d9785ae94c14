#pragma once

#include <deque>
#include <string>
#include <vector>

#include "tonesr/nn/kernels.hpp"
#include "tonesr/nn/tensor.hpp"
#include "tonesr/rng.hpp"

namespace tonesr::nn {

struct ParamTensor {
    std::string name;
    Tensor v, g;
};

// Owns a network's parameters; deque keeps addresses stable while modules
// are added, so layer objects can hold plain pointers.
class ParamStore {
public:
    ParamTensor* add(const std::string& name, int n, int c, int h, int w) {
        list_.emplace_back();
        ParamTensor& p = list_.back();
        p.name = name;
        p.v.reshape(n, c, h, w);
        p.g.reshape(n, c, h, w);
        return &p;
    }
    std::deque<ParamTensor>& params() { return list_; }
    const std::deque<ParamTensor>& params() const { return list_; }
    void zero_grads() {
        for (auto& p : list_) p.g.zero();
    }
    size_t param_count() const {
        size_t n = 0;
        for (const auto& p : list_) n += p.v.numel();
        return n;
    }

private:
    std::deque<ParamTensor> list_;
};

class Conv2d {
public:
    Conv2d() = default;
    Conv2d(ParamStore& store, const std::string& name, int cin, int cout, int k, int stride,
           int pad, bool bias = true)
        : cin_(cin), cout_(cout), k_(k), stride_(stride), pad_(pad), has_bias_(bias) {
        w_ = store.add(name + ".weight", cout, cin * k * k, 1, 1);
        if (bias) b_ = store.add(name + ".bias", cout, 1, 1, 1);
    }

    void init_he(Rng& rng, float scale = 1.f) {
        const float std = scale * std::sqrt(2.0f / (cin_ * k_ * k_));
        for (auto& x : w_->v.v) x = static_cast<float>(rng.normal()) * std;
        if (b_) b_->v.zero();
    }

    kernels::ConvShape shape(const Tensor& x) const {
        return {x.n, cin_, x.h, x.w, cout_, k_, k_, stride_, pad_};
    }

    void forward(const Tensor& x, Tensor& y) const {
        if (x.c != cin_) throw std::invalid_argument(w_->name + ": channel mismatch");
        const auto s = shape(x);
        y.reshape_keep(x.n, cout_, s.out_h(), s.out_w());
        kernels::conv2d_forward(s, x.data(), w_->v.data(), b_ ? b_->v.data() : nullptr,
                                y.data());
    }

    // x must be the exact forward input; gx may be null.
    void backward(const Tensor& x, const Tensor& gy, Tensor* gx, bool weight_grads = true) {
        const auto s = shape(x);
        if (gx) {
            gx->reshape_keep(x.n, x.c, x.h, x.w);
            kernels::conv2d_backward_data(s, gy.data(), w_->v.data(), gx->data());
        }
        if (weight_grads)
            kernels::conv2d_backward_weights(s, x.data(), gy.data(), w_->g.data(),
                                             b_ ? b_->g.data() : nullptr);
    }

    int cout() const { return cout_; }
    int cin() const { return cin_; }

private:
    int cin_ = 0, cout_ = 0, k_ = 0, stride_ = 1, pad_ = 0;
    bool has_bias_ = true;
    ParamTensor* w_ = nullptr;
    ParamTensor* b_ = nullptr;
};

// channel concat y = [a; b]
inline void concat2(const Tensor& a, const Tensor& b, Tensor& y) {
    y.reshape_keep(a.n, a.c + b.c, a.h, a.w);
    const size_t pa = static_cast<size_t>(a.c) * a.plane();
    const size_t pb = static_cast<size_t>(b.c) * b.plane();
    for (int n = 0; n < a.n; ++n) {
        std::copy(a.data() + n * pa, a.data() + (n + 1) * pa, y.data() + n * (pa + pb));
        std::copy(b.data() + n * pb, b.data() + (n + 1) * pb, y.data() + n * (pa + pb) + pa);
    }
}

inline void split2_accum(const Tensor& gy, Tensor& ga, Tensor& gb) {
    const size_t pa = static_cast<size_t>(ga.c) * ga.plane();
    const size_t pb = static_cast<size_t>(gb.c) * gb.plane();
    for (int n = 0; n < gy.n; ++n) {
        const float* src = gy.data() + n * (pa + pb);
        float* da = ga.data() + n * pa;
        float* db = gb.data() + n * pb;
        for (size_t i = 0; i < pa; ++i) da[i] += src[i];
        for (size_t i = 0; i < pb; ++i) db[i] += src[pa + i];
    }
}

inline void lrelu_inplace(Tensor& t, float slope) {
    kernels::leaky_relu_forward(t.data(), t.data(), t.numel(), slope);
}

}  // namespace tonesr::nn
