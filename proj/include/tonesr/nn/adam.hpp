#pragma once

#include <cmath>
#include <vector>

#include "tonesr/nn/layers.hpp"

namespace tonesr::nn {

class Adam {
public:
    explicit Adam(float lr = 1e-4f, float beta1 = 0.9f, float beta2 = 0.999f, float eps = 1e-8f)
        : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}

    float lr() const { return lr_; }
    void set_lr(float lr) { lr_ = lr; }

    // One update over every parameter in the store; zeroes gradients after.
    void step(ParamStore& store) {
        auto& params = store.params();
        if (m_.size() != params.size()) {
            m_.resize(params.size());
            v_.resize(params.size());
            size_t i = 0;
            for (auto& p : params) {
                m_[i].assign(p.v.numel(), 0.f);
                v_[i].assign(p.v.numel(), 0.f);
                ++i;
            }
        }
        ++t_;
        const float bc1 = 1.f - std::pow(b1_, static_cast<float>(t_));
        const float bc2 = 1.f - std::pow(b2_, static_cast<float>(t_));
        size_t i = 0;
        for (auto& param : params) {
            auto& p = param.v.v;
            auto& g = param.g.v;
            auto& m = m_[i];
            auto& v = v_[i];
            for (size_t k = 0; k < p.size(); ++k) {
                m[k] = b1_ * m[k] + (1.f - b1_) * g[k];
                v[k] = b2_ * v[k] + (1.f - b2_) * g[k] * g[k];
                const float mh = m[k] / bc1;
                const float vh = v[k] / bc2;
                p[k] -= lr_ * mh / (std::sqrt(vh) + eps_);
                g[k] = 0.f;
            }
            ++i;
        }
    }

private:
    float lr_, b1_, b2_, eps_;
    int t_ = 0;
    std::vector<std::vector<float>> m_, v_;
};

}  // namespace tonesr::nn
