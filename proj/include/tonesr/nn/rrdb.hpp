#pragma once

#include <cstdint>
#include <vector>

#include "tonesr/nn/layers.hpp"

namespace tonesr::nn {

struct RRDBConfig {
    int scale = 4;  // 2 or 4
    int in_ch = 1;
    int out_ch = 1;
    int nf = 32;  // trunk width
    int gc = 16;  // dense growth
    int nb = 8;   // RRDB blocks
};

// Residual-in-residual dense generator with nearest-neighbor + conv
// upsampling stages. Trunk runs at input resolution.
class RRDBNet {
public:
    RRDBNet(const RRDBConfig& cfg, uint64_t seed);
    RRDBNet(const RRDBNet&) = delete;
    RRDBNet& operator=(const RRDBNet&) = delete;

    void forward(const Tensor& x, Tensor& out);
    void backward(const Tensor& gout, bool weight_grads = true);

    ParamStore store;
    RRDBConfig cfg;

private:
    struct Dense {
        Conv2d c[5];
        // post-activation intermediates (x1..x4) and the block input
        Tensor in, x1, x2, x3, x4;
    };
    struct Block {
        Dense d[3];
        Tensor in;  // block input for the outer residual
    };

    void dense_forward(Dense& d, const Tensor& x, Tensor& out);
    // gout: gradient at the dense output; gx accumulated gradient at input
    void dense_backward(Dense& d, const Tensor& gout, Tensor& gx, bool weight_grads);
    void rebuild_cat(Dense& d, int upto);

    Conv2d first_, trunk_, up1_, up2_, hr_, last_;
    std::vector<Block> blocks_;

    Tensor x_in_, fea_, trunk_out_, fea2_;
    Tensor n1_, u1_, n2_, u2_, hra_;
    std::vector<Tensor> block_out_;
    Tensor cat_, cat2_;  // concat scratch
    Tensor gtmp_, gcat_;
};

}  // namespace tonesr::nn
