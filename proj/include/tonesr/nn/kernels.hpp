#pragma once

#include <cstddef>

namespace tonesr::nn::kernels {

// The parallel backend runs the im2col/BLAS convolutions and OpenMP
// elementwise loops; the serial backend is the plain-loop reference kept for
// testing. tools/tonesr_bench compares the two.
enum class Backend { serial, parallel };
Backend backend();
void set_backend(Backend b);

struct ConvShape {
    int n, cin, h, w;        // input
    int cout, kh, kw;        // filter (weights laid out [cout][cin*kh*kw])
    int stride, pad;
    int out_h() const { return (h + 2 * pad - kh) / stride + 1; }
    int out_w() const { return (w + 2 * pad - kw) / stride + 1; }
};

void conv2d_forward(const ConvShape& s, const float* x, const float* w, const float* bias,
                    float* y);
// gx may be null when the input gradient is not needed.
void conv2d_backward_data(const ConvShape& s, const float* gy, const float* w, float* gx);
// Accumulates (+=) into gw / gb; gb may be null for bias-free convs.
void conv2d_backward_weights(const ConvShape& s, const float* x, const float* gy, float* gw,
                             float* gb);

// y = max(x, 0) + slope * min(x, 0); backward keyed off the saved output sign.
void leaky_relu_forward(const float* x, float* y, size_t n, float slope);
void leaky_relu_backward(const float* y, const float* gy, float* gx, size_t n, float slope);

void add(const float* a, const float* b, float* y, size_t n);          // y = a + b
void axpy(float alpha, const float* x, float* y, size_t n);            // y += alpha * x
void scale_add(const float* a, const float* b, float alpha, float* y, size_t n);  // y = a + alpha*b

// 2x2 max pooling (dims must be even); idx stores the winning corner (0..3).
void maxpool2_forward(const float* x, int n, int c, int h, int w, float* y, unsigned char* idx);
void maxpool2_backward(const float* gy, const unsigned char* idx, int n, int c, int h, int w,
                       float* gx);

// x2 bilinear upsample (align_corners = false) and its transpose.
void upsample_bilinear2_forward(const float* x, int n, int c, int h, int w, float* y);
void upsample_bilinear2_backward(const float* gy, int n, int c, int h, int w, float* gx);

// x2 nearest upsample and its transpose (2x2 gradient sum).
void upsample_nearest2_forward(const float* x, int n, int c, int h, int w, float* y);
void upsample_nearest2_backward(const float* gy, int n, int c, int h, int w, float* gx);

// channel softmax over NCHW (per pixel across c)
void softmax_channels(const float* x, float* p, int n, int c, size_t plane);
// gx_c = p_c * (gp_c - sum_k p_k gp_k)
void softmax_backward(const float* p, const float* gp, float* gx, int n, int c, size_t plane);

}  // namespace tonesr::nn::kernels
