#pragma once

#include <cstdint>
#include <vector>

#include "tonesr/nn/layers.hpp"

namespace tonesr::nn {

struct UNetConfig {
    int in_ch = 1;
    int out_ch = 2;
    int depth = 4;   // number of pooling stages
    int base = 32;   // width of the first level
    float slope = 0.0f;  // leaky-relu slope (0 = relu)
};

// Encoder-decoder with skip connections, max-pool downsampling and bilinear
// upsampling in the decoder; linear 1x1 head. Input dims must be divisible
// by 2^depth.
class UNet {
public:
    UNet(const UNetConfig& cfg, uint64_t seed);
    UNet(const UNet&) = delete;
    UNet& operator=(const UNet&) = delete;

    void forward(const Tensor& x, Tensor& out);
    // Consumes the activations of the last forward.
    void backward(const Tensor& gout, Tensor* gx = nullptr, bool weight_grads = true);
    void backward(const Tensor& gout, bool weight_grads) { backward(gout, nullptr, weight_grads); }

    // Perceptual-feature path: pre-activation output of the designated
    // encoder conv (level feature_level, second conv), resolution /2^level.
    void forward_features(const Tensor& x, Tensor& feat);
    void backward_features(const Tensor& gfeat, Tensor& gx);

    ParamStore store;
    UNetConfig cfg;
    int feature_level = 2;

private:
    struct Block {
        Conv2d c1, c2;
    };
    std::vector<Block> enc_;
    Block bott_;
    std::vector<Block> dec_;
    Conv2d head_;

    // training-pass activations
    Tensor x_;
    std::vector<Tensor> e1_, e2_, pool_;
    std::vector<std::vector<unsigned char>> poolidx_;
    Tensor b1_, b2_;
    std::vector<Tensor> up_, d1_, d2_;
    Tensor cat_scratch_;

    // feature-pass activations
    Tensor fx_;
    std::vector<Tensor> fe1_, fe2_, fpool_;
    std::vector<std::vector<unsigned char>> fpoolidx_;
};

}  // namespace tonesr::nn
