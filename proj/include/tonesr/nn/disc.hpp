#pragma once

#include <cstdint>
#include <vector>

#include "tonesr/nn/layers.hpp"

namespace tonesr::nn {

// Patch-level convolutional classifier; emits a logit map at 1/8 resolution.
class PatchDiscriminator {
public:
    PatchDiscriminator(int in_ch, int base, uint64_t seed);
    PatchDiscriminator(const PatchDiscriminator&) = delete;
    PatchDiscriminator& operator=(const PatchDiscriminator&) = delete;

    void forward(const Tensor& x, Tensor& logits);
    // gx needed for the generator's adversarial gradient
    void backward(const Tensor& glogits, Tensor* gx, bool weight_grads);

    ParamStore store;

private:
    std::vector<Conv2d> convs_;
    std::vector<int> strides_;
    Tensor x_;
    std::vector<Tensor> acts_;
};

}  // namespace tonesr::nn
