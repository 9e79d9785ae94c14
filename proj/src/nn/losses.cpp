#include "tonesr/nn/losses.hpp"

#include <cmath>
#include <stdexcept>

#include "tonesr/nn/kernels.hpp"

namespace tonesr::nn {

namespace {

inline double softplus(double z) {
    // stable log(1 + e^z)
    if (z > 30) return z;
    if (z < -30) return 0;
    return std::log1p(std::exp(z));
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

double l1_loss(const Tensor& a, const Tensor& b, Tensor* ga) {
    check_same_shape(a, b, "l1_loss");
    const size_t n = a.numel();
    if (ga) {
        ga->reshape_keep(a.n, a.c, a.h, a.w);
    }
    double acc = 0.0;
    const float invn = 1.0f / static_cast<float>(n);
    for (size_t i = 0; i < n; ++i) {
        const float d = a.v[i] - b.v[i];
        acc += std::abs(static_cast<double>(d));
        if (ga) ga->v[i] = (d > 0.f ? invn : (d < 0.f ? -invn : 0.f));
    }
    return acc / static_cast<double>(n);
}

MaskedL1 masked_l1(const Tensor& pred, const Tensor& target, const std::vector<uint8_t>& valid,
                   Tensor* gpred) {
    check_same_shape(pred, target, "masked_l1");
    if (valid.size() != pred.plane() * pred.n)
        throw std::invalid_argument("masked_l1: validity plane size mismatch");
    MaskedL1 out;
    size_t count = 0;
    for (auto v : valid) count += (v != 0);
    count *= static_cast<size_t>(pred.c);
    if (gpred) {
        gpred->reshape_keep(pred.n, pred.c, pred.h, pred.w);
        gpred->zero();
    }
    if (count == 0) {
        out.empty = true;
        return out;
    }
    const size_t plane = pred.plane();
    double acc = 0.0;
    const float invn = 1.0f / static_cast<float>(count);
    for (int n = 0; n < pred.n; ++n) {
        const uint8_t* vp = valid.data() + static_cast<size_t>(n) * plane;
        for (int c = 0; c < pred.c; ++c) {
            const size_t base = (static_cast<size_t>(n) * pred.c + c) * plane;
            for (size_t i = 0; i < plane; ++i) {
                if (!vp[i]) continue;
                const float d = pred.v[base + i] - target.v[base + i];
                acc += std::abs(static_cast<double>(d));
                if (gpred) gpred->v[base + i] = (d > 0.f ? invn : (d < 0.f ? -invn : 0.f));
            }
        }
    }
    out.value = acc / static_cast<double>(count);
    return out;
}

double ragan_generator_loss(const Tensor& d_real, const Tensor& d_fake, Tensor* g_dfake) {
    const size_t nr = d_real.numel(), nf = d_fake.numel();
    if (!nr || !nf) throw std::invalid_argument("ragan: empty score batch");
    double mr = 0, mf = 0;
    for (size_t i = 0; i < nr; ++i) mr += d_real.v[i];
    for (size_t j = 0; j < nf; ++j) mf += d_fake.v[j];
    mr /= static_cast<double>(nr);
    mf /= static_cast<double>(nf);

    double loss = 0, mean_sig_r = 0;
    for (size_t i = 0; i < nr; ++i) {
        loss += softplus(d_real.v[i] - mf);  // -log(1 - sigma(xr - mf))
        mean_sig_r += sigmoid(d_real.v[i] - mf);
    }
    loss /= static_cast<double>(nr);
    mean_sig_r /= static_cast<double>(nr);
    double loss_f = 0;
    for (size_t j = 0; j < nf; ++j) loss_f += softplus(mr - d_fake.v[j]);  // -log sigma(xf - mr)
    loss += loss_f / static_cast<double>(nf);

    if (g_dfake) {
        g_dfake->reshape_keep(d_fake.n, d_fake.c, d_fake.h, d_fake.w);
        const double inv_nf = 1.0 / static_cast<double>(nf);
        for (size_t j = 0; j < nf; ++j)
            g_dfake->v[j] = static_cast<float>(
                inv_nf * (-sigmoid(mr - d_fake.v[j]) - mean_sig_r));
    }
    return loss;
}

double ragan_discriminator_loss(const Tensor& d_real, const Tensor& d_fake, Tensor* g_dreal,
                                Tensor* g_dfake) {
    const size_t nr = d_real.numel(), nf = d_fake.numel();
    if (!nr || !nf) throw std::invalid_argument("ragan: empty score batch");
    double mr = 0, mf = 0;
    for (size_t i = 0; i < nr; ++i) mr += d_real.v[i];
    for (size_t j = 0; j < nf; ++j) mf += d_fake.v[j];
    mr /= static_cast<double>(nr);
    mf /= static_cast<double>(nf);

    double loss = 0, mean_sig_r = 0, mean_sig_f = 0;
    for (size_t i = 0; i < nr; ++i) {
        loss += softplus(mf - d_real.v[i]);  // -log sigma(xr - mf)
        mean_sig_r += sigmoid(mf - d_real.v[i]);
    }
    loss /= static_cast<double>(nr);
    mean_sig_r /= static_cast<double>(nr);
    double lf = 0;
    for (size_t j = 0; j < nf; ++j) {
        lf += softplus(d_fake.v[j] - mr);  // -log(1 - sigma(xf - mr))
        mean_sig_f += sigmoid(d_fake.v[j] - mr);
    }
    loss += lf / static_cast<double>(nf);
    mean_sig_f /= static_cast<double>(nf);

    if (g_dreal) {
        g_dreal->reshape_keep(d_real.n, d_real.c, d_real.h, d_real.w);
        const double inv_nr = 1.0 / static_cast<double>(nr);
        for (size_t i = 0; i < nr; ++i)
            g_dreal->v[i] =
                static_cast<float>(inv_nr * (-sigmoid(mf - d_real.v[i]) - mean_sig_f));
    }
    if (g_dfake) {
        g_dfake->reshape_keep(d_fake.n, d_fake.c, d_fake.h, d_fake.w);
        const double inv_nf = 1.0 / static_cast<double>(nf);
        for (size_t j = 0; j < nf; ++j)
            g_dfake->v[j] =
                static_cast<float>(inv_nf * (sigmoid(d_fake.v[j] - mr) + mean_sig_r));
    }
    return loss;
}

double dice_softmax_loss(const Tensor& logits, const std::vector<uint8_t>& labels,
                         Tensor* glogits) {
    const int C = logits.c;
    const size_t plane = logits.plane();
    if (labels.size() != plane * logits.n)
        throw std::invalid_argument("dice_softmax_loss: label plane mismatch");

    Tensor probs;
    probs.reshape_keep(logits.n, C, logits.h, logits.w);
    kernels::softmax_channels(logits.data(), probs.data(), logits.n, C, plane);

    Tensor gprobs;
    if (glogits) {
        gprobs.reshape_keep(logits.n, C, logits.h, logits.w);
        gprobs.zero();
    }

    // soft dice per channel over the whole batch; the smooth term sends
    // channels absent from both sides to a perfect score instead of 0/0
    constexpr double kSmooth = 1e-4;
    double mean_dice = 0.0;
    for (int c = 0; c < C; ++c) {
        double num = 0, den = 0;
        for (int n = 0; n < logits.n; ++n) {
            const float* p = probs.data() + (static_cast<size_t>(n) * C + c) * plane;
            const uint8_t* l = labels.data() + static_cast<size_t>(n) * plane;
            for (size_t i = 0; i < plane; ++i) {
                const double t = (l[i] == c) ? 1.0 : 0.0;
                num += p[i] * t;
                den += p[i] + t;
            }
        }
        const double dice = (2.0 * num + kSmooth) / (den + kSmooth);
        mean_dice += dice;
        if (glogits) {
            // d(1 - meanDice)/dp = -(2 t (den+s) - (2 num + s)) / (den+s)^2 / C
            const double ds = den + kSmooth;
            const double inv = 1.0 / (ds * ds * C);
            for (int n = 0; n < logits.n; ++n) {
                float* gp = gprobs.data() + (static_cast<size_t>(n) * C + c) * plane;
                const uint8_t* l = labels.data() + static_cast<size_t>(n) * plane;
                for (size_t i = 0; i < plane; ++i) {
                    const double t = (l[i] == c) ? 1.0 : 0.0;
                    gp[i] = static_cast<float>(-(2.0 * t * ds - (2.0 * num + kSmooth)) * inv);
                }
            }
        }
    }
    mean_dice /= C;
    if (glogits) {
        glogits->reshape_keep(logits.n, C, logits.h, logits.w);
        kernels::softmax_backward(probs.data(), gprobs.data(), glogits->data(), logits.n, C,
                                  plane);
    }
    return 1.0 - mean_dice;
}

}  // namespace tonesr::nn
