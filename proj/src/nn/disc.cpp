#include "tonesr/nn/disc.hpp"

namespace tonesr::nn {

using namespace kernels;

PatchDiscriminator::PatchDiscriminator(int in_ch, int base, uint64_t seed) {
    struct L {
        int cin, cout, k, stride;
    };
    const std::vector<L> plan = {
        {in_ch, base, 3, 1},     {base, base, 3, 2},      {base, base * 2, 3, 1},
        {base * 2, base * 2, 3, 2}, {base * 2, base * 4, 3, 1}, {base * 4, base * 4, 3, 2},
        {base * 4, 1, 1, 1},
    };
    Rng rng = Rng::stream(seed, "disc-init");
    int li = 0;
    for (const auto& l : plan) {
        convs_.emplace_back(store, "d" + std::to_string(li++), l.cin, l.cout, l.k, l.stride,
                            l.k == 3 ? 1 : 0);
        strides_.push_back(l.stride);
        convs_.back().init_he(rng);
    }
    acts_.resize(convs_.size());
}

void PatchDiscriminator::forward(const Tensor& x, Tensor& logits) {
    x_ = x;
    const Tensor* cur = &x_;
    for (size_t i = 0; i + 1 < convs_.size(); ++i) {
        convs_[i].forward(*cur, acts_[i]);
        lrelu_inplace(acts_[i], 0.2f);
        cur = &acts_[i];
    }
    convs_.back().forward(*cur, logits);
}

void PatchDiscriminator::backward(const Tensor& glogits, Tensor* gx, bool weight_grads) {
    Tensor g, g2;
    const size_t L = convs_.size();
    convs_[L - 1].backward(acts_[L - 2], glogits, &g, weight_grads);
    for (size_t i = L - 1; i-- > 0;) {
        leaky_relu_backward(acts_[i].data(), g.data(), g.data(), g.numel(), 0.2f);
        const Tensor& input = (i == 0) ? x_ : acts_[i - 1];
        const bool need = (i > 0) || (gx != nullptr);
        convs_[i].backward(input, g, need ? &g2 : nullptr, weight_grads);
        std::swap(g, g2);
    }
    if (gx) *gx = g;
}

}  // namespace tonesr::nn
