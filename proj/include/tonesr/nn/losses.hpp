#pragma once

#include <vector>

#include "tonesr/nn/tensor.hpp"

namespace tonesr::nn {

// mean |a - b|; ga (optional) receives dL/da.
double l1_loss(const Tensor& a, const Tensor& b, Tensor* ga = nullptr);

// L1 over pixels where valid != 0, averaged over valid pixels and channels.
// valid is one plane broadcast across channels. Returns 0 (flagged) when no
// pixel is valid.
struct MaskedL1 {
    double value = 0;
    bool empty = false;
};
MaskedL1 masked_l1(const Tensor& pred, const Tensor& target, const std::vector<uint8_t>& valid,
                   Tensor* gpred = nullptr);

// Relativistic-average GAN terms on raw logits.
double ragan_generator_loss(const Tensor& d_real, const Tensor& d_fake, Tensor* g_dfake);
double ragan_discriminator_loss(const Tensor& d_real, const Tensor& d_fake, Tensor* g_dreal,
                                Tensor* g_dfake);

// Soft multi-channel Dice loss on logits: softmax across channels, then
// 1 - meanDice against integer labels. glogits receives dLoss/dlogits.
double dice_softmax_loss(const Tensor& logits, const std::vector<uint8_t>& labels,
                         Tensor* glogits);

}  // namespace tonesr::nn
