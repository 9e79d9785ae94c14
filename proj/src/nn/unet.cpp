#include "tonesr/nn/unet.hpp"

#include <stdexcept>

namespace tonesr::nn {

using namespace kernels;

UNet::UNet(const UNetConfig& cfg_in, uint64_t seed) : cfg(cfg_in) {
    const int D = cfg.depth;
    enc_.resize(D);
    dec_.resize(D);
    for (int i = 0; i < D; ++i) {
        const int win = (i == 0) ? cfg.in_ch : (cfg.base << (i - 1));
        const int wout = cfg.base << i;
        enc_[i].c1 = Conv2d(store, "enc" + std::to_string(i) + ".c1", win, wout, 3, 1, 1);
        enc_[i].c2 = Conv2d(store, "enc" + std::to_string(i) + ".c2", wout, wout, 3, 1, 1);
    }
    const int wb = cfg.base << D;
    bott_.c1 = Conv2d(store, "bott.c1", cfg.base << (D - 1), wb, 3, 1, 1);
    bott_.c2 = Conv2d(store, "bott.c2", wb, wb, 3, 1, 1);
    for (int i = D - 1; i >= 0; --i) {
        const int wskip = cfg.base << i;
        const int wdeep = cfg.base << (i + 1);
        dec_[i].c1 =
            Conv2d(store, "dec" + std::to_string(i) + ".c1", wdeep + wskip, wskip, 3, 1, 1);
        dec_[i].c2 = Conv2d(store, "dec" + std::to_string(i) + ".c2", wskip, wskip, 3, 1, 1);
    }
    head_ = Conv2d(store, "head", cfg.base, cfg.out_ch, 1, 1, 0);

    Rng rng = Rng::stream(seed, "unet-init");
    for (int i = 0; i < D; ++i) {
        enc_[i].c1.init_he(rng);
        enc_[i].c2.init_he(rng);
    }
    bott_.c1.init_he(rng);
    bott_.c2.init_he(rng);
    for (int i = 0; i < D; ++i) {
        dec_[i].c1.init_he(rng);
        dec_[i].c2.init_he(rng);
    }
    head_.init_he(rng);

    e1_.resize(D);
    e2_.resize(D);
    pool_.resize(D);
    poolidx_.resize(D);
    up_.resize(D);
    d1_.resize(D);
    d2_.resize(D);
    fe1_.resize(D);
    fe2_.resize(D);
    fpool_.resize(D);
    fpoolidx_.resize(D);
    feature_level = std::min(2, D - 1);
}

void UNet::forward(const Tensor& x, Tensor& out) {
    const int D = cfg.depth;
    if (x.h % (1 << D) || x.w % (1 << D))
        throw std::invalid_argument("UNet: input dims must be divisible by 2^depth");
    x_ = x;
    const Tensor* cur = &x_;
    for (int i = 0; i < D; ++i) {
        enc_[i].c1.forward(*cur, e1_[i]);
        lrelu_inplace(e1_[i], cfg.slope);
        enc_[i].c2.forward(e1_[i], e2_[i]);
        lrelu_inplace(e2_[i], cfg.slope);
        pool_[i].reshape_keep(e2_[i].n, e2_[i].c, e2_[i].h / 2, e2_[i].w / 2);
        poolidx_[i].resize(pool_[i].numel());
        maxpool2_forward(e2_[i].data(), e2_[i].n, e2_[i].c, e2_[i].h, e2_[i].w, pool_[i].data(),
                         poolidx_[i].data());
        cur = &pool_[i];
    }
    bott_.c1.forward(*cur, b1_);
    lrelu_inplace(b1_, cfg.slope);
    bott_.c2.forward(b1_, b2_);
    lrelu_inplace(b2_, cfg.slope);
    cur = &b2_;
    for (int i = D - 1; i >= 0; --i) {
        up_[i].reshape_keep(cur->n, cur->c, cur->h * 2, cur->w * 2);
        upsample_bilinear2_forward(cur->data(), cur->n, cur->c, cur->h, cur->w, up_[i].data());
        concat2(up_[i], e2_[i], cat_scratch_);
        dec_[i].c1.forward(cat_scratch_, d1_[i]);
        lrelu_inplace(d1_[i], cfg.slope);
        dec_[i].c2.forward(d1_[i], d2_[i]);
        lrelu_inplace(d2_[i], cfg.slope);
        cur = &d2_[i];
    }
    head_.forward(*cur, out);
}

void UNet::backward(const Tensor& gout, Tensor* gx, bool weight_grads) {
    const int D = cfg.depth;
    Tensor g, g2, gskip, gcat;
    head_.backward(d2_[0], gout, &g, weight_grads);

    // skip gradients accumulate from both the decoder concat and the pool path
    std::vector<Tensor> ge2(D);
    for (int i = 0; i < D; ++i) {
        ge2[i].reshape_keep(e2_[i].n, e2_[i].c, e2_[i].h, e2_[i].w);
        ge2[i].zero();
    }

    for (int i = 0; i <= D - 1; ++i) {
        // g currently holds dL/d d2_[i]
        leaky_relu_backward(d2_[i].data(), g.data(), g.data(), g.numel(), cfg.slope);
        dec_[i].c2.backward(d1_[i], g, &g2, weight_grads);
        leaky_relu_backward(d1_[i].data(), g2.data(), g2.data(), g2.numel(), cfg.slope);
        concat2(up_[i], e2_[i], cat_scratch_);  // rebuild conv input
        dec_[i].c1.backward(cat_scratch_, g2, &gcat, weight_grads);
        // split into up-gradient and skip-gradient
        Tensor gup;
        gup.reshape_keep(up_[i].n, up_[i].c, up_[i].h, up_[i].w);
        gup.zero();
        split2_accum(gcat, gup, ge2[i]);
        // through the bilinear upsample into the deeper stage
        g.reshape_keep(gup.n, gup.c, gup.h / 2, gup.w / 2);
        upsample_bilinear2_backward(gup.data(), gup.n, gup.c, gup.h / 2, gup.w / 2, g.data());
        // g now holds dL/d(deeper out) = d2_[i+1] or b2_
    }

    // bottleneck
    leaky_relu_backward(b2_.data(), g.data(), g.data(), g.numel(), cfg.slope);
    bott_.c2.backward(b1_, g, &g2, weight_grads);
    leaky_relu_backward(b1_.data(), g2.data(), g2.data(), g2.numel(), cfg.slope);
    bott_.c1.backward(pool_[D - 1], g2, &g, weight_grads);

    // encoder, deepest first; g holds dL/d pool_[i]
    for (int i = D - 1; i >= 0; --i) {
        g2.reshape_keep(e2_[i].n, e2_[i].c, e2_[i].h, e2_[i].w);
        maxpool2_backward(g.data(), poolidx_[i].data(), e2_[i].n, e2_[i].c, e2_[i].h, e2_[i].w,
                          g2.data());
        // add the skip contribution
        kernels::add(g2.data(), ge2[i].data(), g2.data(), g2.numel());
        leaky_relu_backward(e2_[i].data(), g2.data(), g2.data(), g2.numel(), cfg.slope);
        enc_[i].c2.backward(e1_[i], g2, &g, weight_grads);
        leaky_relu_backward(e1_[i].data(), g.data(), g.data(), g.numel(), cfg.slope);
        const Tensor& input = (i == 0) ? x_ : pool_[i - 1];
        const bool need_gx = (i > 0) || (gx != nullptr);
        enc_[i].c1.backward(input, g, need_gx ? &g2 : nullptr, weight_grads);
        if (i > 0) {
            std::swap(g, g2);
        } else if (gx) {
            *gx = g2;
        }
    }
}

void UNet::forward_features(const Tensor& x, Tensor& feat) {
    const int L = feature_level;
    fx_ = x;
    const Tensor* cur = &fx_;
    for (int i = 0; i < L; ++i) {
        enc_[i].c1.forward(*cur, fe1_[i]);
        lrelu_inplace(fe1_[i], cfg.slope);
        enc_[i].c2.forward(fe1_[i], fe2_[i]);
        lrelu_inplace(fe2_[i], cfg.slope);
        fpool_[i].reshape_keep(fe2_[i].n, fe2_[i].c, fe2_[i].h / 2, fe2_[i].w / 2);
        fpoolidx_[i].resize(fpool_[i].numel());
        maxpool2_forward(fe2_[i].data(), fe2_[i].n, fe2_[i].c, fe2_[i].h, fe2_[i].w,
                         fpool_[i].data(), fpoolidx_[i].data());
        cur = &fpool_[i];
    }
    enc_[L].c1.forward(*cur, fe1_[L]);
    lrelu_inplace(fe1_[L], cfg.slope);
    enc_[L].c2.forward(fe1_[L], feat);  // pre-activation features
}

void UNet::backward_features(const Tensor& gfeat, Tensor& gx) {
    const int L = feature_level;
    Tensor g, g2;
    enc_[L].c2.backward(fe1_[L], gfeat, &g, false);
    leaky_relu_backward(fe1_[L].data(), g.data(), g.data(), g.numel(), cfg.slope);
    enc_[L].c1.backward(L > 0 ? fpool_[L - 1] : fx_, g, &g2, false);
    for (int i = L - 1; i >= 0; --i) {
        g.reshape_keep(fe2_[i].n, fe2_[i].c, fe2_[i].h, fe2_[i].w);
        maxpool2_backward(g2.data(), fpoolidx_[i].data(), fe2_[i].n, fe2_[i].c, fe2_[i].h,
                          fe2_[i].w, g.data());
        leaky_relu_backward(fe2_[i].data(), g.data(), g.data(), g.numel(), cfg.slope);
        enc_[i].c2.backward(fe1_[i], g, &g2, false);
        leaky_relu_backward(fe1_[i].data(), g2.data(), g2.data(), g2.numel(), cfg.slope);
        enc_[i].c1.backward(i > 0 ? fpool_[i - 1] : fx_, g2, &g, false);
        std::swap(g, g2);
    }
    gx = g2;
}

}  // namespace tonesr::nn
