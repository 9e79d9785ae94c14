#include "tonesr/nn/rrdb.hpp"

#include <stdexcept>

namespace tonesr::nn {

using namespace kernels;

namespace {
constexpr float kResScale = 0.2f;
}

RRDBNet::RRDBNet(const RRDBConfig& cfg_in, uint64_t seed) : cfg(cfg_in) {
    if (cfg.scale != 2 && cfg.scale != 4)
        throw std::invalid_argument("RRDBNet: scale must be 2 or 4");
    first_ = Conv2d(store, "first", cfg.in_ch, cfg.nf, 3, 1, 1);
    blocks_.resize(cfg.nb);
    for (int b = 0; b < cfg.nb; ++b) {
        for (int d = 0; d < 3; ++d) {
            for (int c = 0; c < 5; ++c) {
                const int cin = cfg.nf + c * cfg.gc;
                const int cout = (c == 4) ? cfg.nf : cfg.gc;
                blocks_[b].d[d].c[c] =
                    Conv2d(store,
                           "rrdb" + std::to_string(b) + ".d" + std::to_string(d) + ".c" +
                               std::to_string(c),
                           cin, cout, 3, 1, 1);
            }
        }
    }
    trunk_ = Conv2d(store, "trunk", cfg.nf, cfg.nf, 3, 1, 1);
    up1_ = Conv2d(store, "up1", cfg.nf, cfg.nf, 3, 1, 1);
    if (cfg.scale == 4) up2_ = Conv2d(store, "up2", cfg.nf, cfg.nf, 3, 1, 1);
    hr_ = Conv2d(store, "hr", cfg.nf, cfg.nf, 3, 1, 1);
    last_ = Conv2d(store, "last", cfg.nf, cfg.out_ch, 3, 1, 1);

    // small-gain MSRA init across the board keeps the first outputs in range
    Rng rng = Rng::stream(seed, "rrdb-init");
    first_.init_he(rng, 0.5f);
    for (auto& b : blocks_)
        for (auto& d : b.d)
            for (auto& c : d.c) c.init_he(rng, 0.1f);
    trunk_.init_he(rng, 0.1f);
    up1_.init_he(rng, 0.5f);
    if (cfg.scale == 4) up2_.init_he(rng, 0.5f);
    hr_.init_he(rng, 0.5f);
    last_.init_he(rng, 0.1f);

    block_out_.resize(cfg.nb);
}

void RRDBNet::dense_forward(Dense& d, const Tensor& x, Tensor& out) {
    d.in = x;
    d.c[0].forward(x, d.x1);
    lrelu_inplace(d.x1, 0.2f);
    concat2(x, d.x1, cat_);
    d.c[1].forward(cat_, d.x2);
    lrelu_inplace(d.x2, 0.2f);
    concat2(cat_, d.x2, cat2_);
    std::swap(cat_, cat2_);
    d.c[2].forward(cat_, d.x3);
    lrelu_inplace(d.x3, 0.2f);
    concat2(cat_, d.x3, cat2_);
    std::swap(cat_, cat2_);
    d.c[3].forward(cat_, d.x4);
    lrelu_inplace(d.x4, 0.2f);
    concat2(cat_, d.x4, cat2_);
    std::swap(cat_, cat2_);
    Tensor x5;
    d.c[4].forward(cat_, x5);
    out.reshape_keep(x.n, x.c, x.h, x.w);
    scale_add(x.data(), x5.data(), kResScale, out.data(), out.numel());
}

void RRDBNet::rebuild_cat(Dense& d, int upto) {
    concat2(d.in, d.x1, cat_);
    for (int k = 2; k <= upto; ++k) {
        concat2(cat_, (k == 2) ? d.x2 : (k == 3) ? d.x3 : d.x4, cat2_);
        std::swap(cat_, cat2_);
    }
}

void RRDBNet::dense_backward(Dense& d, const Tensor& gout, Tensor& gx, bool weight_grads) {
    const Tensor& x = d.in;
    // rebuild the full concat [x, x1, x2, x3, x4]
    rebuild_cat(d, 4);

    gx.reshape_keep(x.n, x.c, x.h, x.w);
    gx.v.assign(gx.numel(), 0.f);
    // residual: out = x + 0.2 * x5
    kernels::add(gout.data(), gx.data(), gx.data(), gx.numel());  // gx += gout

    Tensor gx5;
    gx5.reshape_keep(gout.n, gout.c, gout.h, gout.w);
    gx5.zero();
    axpy(kResScale, gout.data(), gx5.data(), gx5.numel());

    // gradients w.r.t. the concat pieces
    Tensor gparts[5];
    gparts[0].reshape_keep(x.n, x.c, x.h, x.w);
    gparts[0].zero();
    for (int i = 1; i <= 4; ++i) {
        gparts[i].reshape_keep(x.n, cfg.gc, x.h, x.w);
        gparts[i].zero();
    }
    auto split_into = [&](const Tensor& gcat, int upto) {
        // distribute channel blocks [x, x1..x_upto]
        size_t off = 0;
        for (int part = 0; part <= upto; ++part) {
            Tensor& dst = gparts[part];
            const size_t pc = static_cast<size_t>(dst.c) * dst.plane();
            const size_t stride = static_cast<size_t>(gcat.c) * gcat.plane();
            for (int n = 0; n < gcat.n; ++n) {
                const float* src = gcat.data() + n * stride + off;
                float* out = dst.data() + n * pc;
                for (size_t i = 0; i < pc; ++i) out[i] += src[i];
            }
            off += pc;
        }
    };

    // c4 consumed [x, x1, x2, x3, x4]
    d.c[4].backward(cat_, gx5, &gcat_, weight_grads);
    split_into(gcat_, 4);

    // walk back through c3..c0, rebuilding each conv's input concat
    for (int ci = 3; ci >= 0; --ci) {
        Tensor& xi = (ci == 3) ? d.x4 : (ci == 2) ? d.x3 : (ci == 1) ? d.x2 : d.x1;
        leaky_relu_backward(xi.data(), gparts[ci + 1].data(), gparts[ci + 1].data(),
                            xi.numel(), 0.2f);
        if (ci == 0) {
            d.c[0].backward(x, gparts[1], &gtmp_, weight_grads);
            kernels::add(gx.data(), gtmp_.data(), gx.data(), gx.numel());
        } else {
            rebuild_cat(d, ci);
            d.c[ci].backward(cat_, gparts[ci + 1], &gcat_, weight_grads);
            split_into(gcat_, ci);
        }
    }
    kernels::add(gx.data(), gparts[0].data(), gx.data(), gx.numel());
}

void RRDBNet::forward(const Tensor& x, Tensor& out) {
    x_in_ = x;
    first_.forward(x_in_, fea_);
    const Tensor* cur = &fea_;
    for (int b = 0; b < cfg.nb; ++b) {
        Block& blk = blocks_[b];
        blk.in = *cur;
        Tensor t1, t2;
        dense_forward(blk.d[0], blk.in, t1);
        dense_forward(blk.d[1], t1, t2);
        Tensor t3;
        dense_forward(blk.d[2], t2, t3);
        block_out_[b].reshape_keep(cur->n, cur->c, cur->h, cur->w);
        scale_add(blk.in.data(), t3.data(), kResScale, block_out_[b].data(),
                  block_out_[b].numel());
        cur = &block_out_[b];
    }
    trunk_.forward(*cur, trunk_out_);
    fea2_.reshape_keep(fea_.n, fea_.c, fea_.h, fea_.w);
    add(fea_.data(), trunk_out_.data(), fea2_.data(), fea2_.numel());

    n1_.reshape_keep(fea2_.n, fea2_.c, fea2_.h * 2, fea2_.w * 2);
    upsample_nearest2_forward(fea2_.data(), fea2_.n, fea2_.c, fea2_.h, fea2_.w, n1_.data());
    up1_.forward(n1_, u1_);
    lrelu_inplace(u1_, 0.2f);
    const Tensor* tail = &u1_;
    if (cfg.scale == 4) {
        n2_.reshape_keep(u1_.n, u1_.c, u1_.h * 2, u1_.w * 2);
        upsample_nearest2_forward(u1_.data(), u1_.n, u1_.c, u1_.h, u1_.w, n2_.data());
        up2_.forward(n2_, u2_);
        lrelu_inplace(u2_, 0.2f);
        tail = &u2_;
    }
    hr_.forward(*tail, hra_);
    lrelu_inplace(hra_, 0.2f);
    last_.forward(hra_, out);
}

void RRDBNet::backward(const Tensor& gout, bool weight_grads) {
    Tensor g, g2;
    last_.backward(hra_, gout, &g, weight_grads);
    leaky_relu_backward(hra_.data(), g.data(), g.data(), g.numel(), 0.2f);
    if (cfg.scale == 4) {
        hr_.backward(u2_, g, &g2, weight_grads);
        leaky_relu_backward(u2_.data(), g2.data(), g2.data(), g2.numel(), 0.2f);
        up2_.backward(n2_, g2, &g, weight_grads);
        g2.reshape_keep(u1_.n, u1_.c, u1_.h, u1_.w);
        upsample_nearest2_backward(g.data(), u1_.n, u1_.c, u1_.h, u1_.w, g2.data());
        std::swap(g, g2);
    } else {
        hr_.backward(u1_, g, &g2, weight_grads);
        std::swap(g, g2);
    }
    leaky_relu_backward(u1_.data(), g.data(), g.data(), g.numel(), 0.2f);
    up1_.backward(n1_, g, &g2, weight_grads);
    g.reshape_keep(fea2_.n, fea2_.c, fea2_.h, fea2_.w);
    upsample_nearest2_backward(g2.data(), fea2_.n, fea2_.c, fea2_.h, fea2_.w, g.data());

    // g = dL/d fea2; split across the global residual
    Tensor gfea = g;  // direct path into conv_first output
    trunk_.backward(block_out_[cfg.nb - 1], g, &g2, weight_grads);

    // back through the RRDB chain; g2 = dL/d block_out[nb-1]
    for (int b = cfg.nb - 1; b >= 0; --b) {
        Block& blk = blocks_[b];
        // outer residual: out = in + 0.2 * t3
        Tensor gt3;
        gt3.reshape_keep(g2.n, g2.c, g2.h, g2.w);
        gt3.zero();
        axpy(kResScale, g2.data(), gt3.data(), gt3.numel());

        Tensor gt2, gt1, gin;
        dense_backward(blk.d[2], gt3, gt2, weight_grads);
        dense_backward(blk.d[1], gt2, gt1, weight_grads);
        dense_backward(blk.d[0], gt1, gin, weight_grads);
        kernels::add(g2.data(), gin.data(), g2.data(), g2.numel());  // + residual passthrough
    }
    kernels::add(g2.data(), gfea.data(), g2.data(), g2.numel());  // + global residual
    first_.backward(x_in_, g2, nullptr, weight_grads);
}

}  // namespace tonesr::nn
