#include "tonesr/nn/kernels.hpp"

#include <cblas.h>
#include <omp.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <vector>

namespace tonesr::nn::kernels {

namespace {

std::atomic<Backend> g_backend{Backend::parallel};

// Output pixels handled per GEMM chunk; bounds the im2col scratch. Chunks
// are aligned to whole output rows so the copies below stay segment-based.
constexpr int kChunkPixels = 16384;

thread_local std::vector<float> tl_col;

// column buffer layout: [cin*kh*kw][chunk] for output pixel rows [r0, r1)
void im2col_rows(const ConvShape& s, const float* x, int r0, int r1, float* col) {
    const int ow = s.out_w();
    const int chunk = (r1 - r0) * ow;
    for (int ci = 0; ci < s.cin; ++ci) {
        const float* xc = x + static_cast<size_t>(ci) * s.h * s.w;
        for (int ky = 0; ky < s.kh; ++ky) {
            for (int kx = 0; kx < s.kw; ++kx) {
                float* dst =
                    col + (static_cast<size_t>(ci) * s.kh * s.kw + ky * s.kw + kx) * chunk;
                for (int oy = r0; oy < r1; ++oy) {
                    float* drow = dst + static_cast<size_t>(oy - r0) * ow;
                    const int iy = oy * s.stride - s.pad + ky;
                    if (iy < 0 || iy >= s.h) {
                        std::memset(drow, 0, sizeof(float) * ow);
                        continue;
                    }
                    const float* xrow = xc + static_cast<size_t>(iy) * s.w;
                    if (s.stride == 1) {
                        // input x for output ox is ox - pad + kx: one span
                        const int shift = kx - s.pad;  // ix = ox + shift
                        const int ox_lo = std::max(0, -shift);
                        const int ox_hi = std::min(ow, s.w - shift);
                        if (ox_lo > 0) std::memset(drow, 0, sizeof(float) * ox_lo);
                        if (ox_hi > ox_lo)
                            std::memcpy(drow + ox_lo, xrow + ox_lo + shift,
                                        sizeof(float) * (ox_hi - ox_lo));
                        if (ox_hi < ow)
                            std::memset(drow + std::max(ox_hi, 0), 0,
                                        sizeof(float) * (ow - std::max(ox_hi, 0)));
                    } else {
                        for (int ox = 0; ox < ow; ++ox) {
                            const int ix = ox * s.stride - s.pad + kx;
                            drow[ox] = (ix >= 0 && ix < s.w) ? xrow[ix] : 0.f;
                        }
                    }
                }
            }
        }
    }
}

void conv2d_forward_serial(const ConvShape& s, const float* x, const float* w, const float* bias,
                           float* y) {
    const int oh = s.out_h(), ow = s.out_w();
    const size_t xplane = static_cast<size_t>(s.cin) * s.h * s.w;
    const size_t yplane = static_cast<size_t>(s.cout) * oh * ow;
    for (int n = 0; n < s.n; ++n) {
        const float* xn = x + n * xplane;
        float* yn = y + n * yplane;
        for (int co = 0; co < s.cout; ++co) {
            const float* wc = w + static_cast<size_t>(co) * s.cin * s.kh * s.kw;
            float* yc = yn + static_cast<size_t>(co) * oh * ow;
            for (int oy = 0; oy < oh; ++oy) {
                for (int ox = 0; ox < ow; ++ox) {
                    float acc = bias ? bias[co] : 0.f;
                    for (int ci = 0; ci < s.cin; ++ci) {
                        const float* xc = xn + static_cast<size_t>(ci) * s.h * s.w;
                        const float* wk = wc + static_cast<size_t>(ci) * s.kh * s.kw;
                        for (int ky = 0; ky < s.kh; ++ky) {
                            const int iy = oy * s.stride - s.pad + ky;
                            if (iy < 0 || iy >= s.h) continue;
                            for (int kx = 0; kx < s.kw; ++kx) {
                                const int ix = ox * s.stride - s.pad + kx;
                                if (ix < 0 || ix >= s.w) continue;
                                acc += wk[ky * s.kw + kx] * xc[static_cast<size_t>(iy) * s.w + ix];
                            }
                        }
                    }
                    yc[static_cast<size_t>(oy) * ow + ox] = acc;
                }
            }
        }
    }
}

void conv2d_forward_fast(const ConvShape& s, const float* x, const float* w, const float* bias,
                         float* y) {
    const int oh = s.out_h(), ow = s.out_w();
    const int pixels = oh * ow;
    const int k = s.cin * s.kh * s.kw;
    const size_t xplane = static_cast<size_t>(s.cin) * s.h * s.w;
    const size_t yplane = static_cast<size_t>(s.cout) * pixels;
    const bool is_1x1 = (s.kh == 1 && s.kw == 1 && s.stride == 1 && s.pad == 0);
    const int rows_per = std::max(1, kChunkPixels / ow);
    if (!is_1x1) tl_col.resize(static_cast<size_t>(k) * std::min(oh, rows_per) * ow);

    for (int n = 0; n < s.n; ++n) {
        const float* xn = x + n * xplane;
        float* yn = y + n * yplane;
        for (int r0 = 0; r0 < oh; r0 += rows_per) {
            const int r1 = std::min(oh, r0 + rows_per);
            const int p0 = r0 * ow;
            const int chunk = (r1 - r0) * ow;
            const float* col = xn + p0;  // 1x1: input is already the column matrix
            if (!is_1x1) {
                im2col_rows(s, xn, r0, r1, tl_col.data());
                col = tl_col.data();
            }
            // y[cout x chunk] = w[cout x k] * col[k x chunk]
            cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, s.cout, chunk, k, 1.f, w, k,
                        col, is_1x1 ? pixels : chunk, 0.f, yn + p0, pixels);
        }
        if (bias) {
#pragma omp parallel for schedule(static) if (backend() == Backend::parallel)
            for (int co = 0; co < s.cout; ++co) {
                float* yc = yn + static_cast<size_t>(co) * pixels;
                const float b = bias[co];
                for (int p = 0; p < pixels; ++p) yc[p] += b;
            }
        }
    }
}

void conv2d_backward_data_serial(const ConvShape& s, const float* gy, const float* w, float* gx) {
    const int oh = s.out_h(), ow = s.out_w();
    const size_t xplane = static_cast<size_t>(s.cin) * s.h * s.w;
    const size_t yplane = static_cast<size_t>(s.cout) * oh * ow;
    std::memset(gx, 0, sizeof(float) * s.n * xplane);
    for (int n = 0; n < s.n; ++n) {
        const float* gyn = gy + n * yplane;
        float* gxn = gx + n * xplane;
        for (int co = 0; co < s.cout; ++co) {
            const float* wc = w + static_cast<size_t>(co) * s.cin * s.kh * s.kw;
            const float* gyc = gyn + static_cast<size_t>(co) * oh * ow;
            for (int oy = 0; oy < oh; ++oy) {
                for (int ox = 0; ox < ow; ++ox) {
                    const float g = gyc[static_cast<size_t>(oy) * ow + ox];
                    if (g == 0.f) continue;
                    for (int ci = 0; ci < s.cin; ++ci) {
                        float* gxc = gxn + static_cast<size_t>(ci) * s.h * s.w;
                        const float* wk = wc + static_cast<size_t>(ci) * s.kh * s.kw;
                        for (int ky = 0; ky < s.kh; ++ky) {
                            const int iy = oy * s.stride - s.pad + ky;
                            if (iy < 0 || iy >= s.h) continue;
                            for (int kx = 0; kx < s.kw; ++kx) {
                                const int ix = ox * s.stride - s.pad + kx;
                                if (ix < 0 || ix >= s.w) continue;
                                gxc[static_cast<size_t>(iy) * s.w + ix] += wk[ky * s.kw + kx] * g;
                            }
                        }
                    }
                }
            }
        }
    }
}

// col2im accumulation for output pixel rows [r0, r1)
void col2im_rows(const ConvShape& s, const float* col, int r0, int r1, float* gx) {
    const int ow = s.out_w();
    const int chunk = (r1 - r0) * ow;
    for (int ci = 0; ci < s.cin; ++ci) {
        float* gxc = gx + static_cast<size_t>(ci) * s.h * s.w;
        for (int ky = 0; ky < s.kh; ++ky) {
            for (int kx = 0; kx < s.kw; ++kx) {
                const float* src =
                    col + (static_cast<size_t>(ci) * s.kh * s.kw + ky * s.kw + kx) * chunk;
                for (int oy = r0; oy < r1; ++oy) {
                    const float* srow = src + static_cast<size_t>(oy - r0) * ow;
                    const int iy = oy * s.stride - s.pad + ky;
                    if (iy < 0 || iy >= s.h) continue;
                    float* grow = gxc + static_cast<size_t>(iy) * s.w;
                    if (s.stride == 1) {
                        const int shift = kx - s.pad;
                        const int ox_lo = std::max(0, -shift);
                        const int ox_hi = std::min(ow, s.w - shift);
                        for (int ox = ox_lo; ox < ox_hi; ++ox) grow[ox + shift] += srow[ox];
                    } else {
                        for (int ox = 0; ox < ow; ++ox) {
                            const int ix = ox * s.stride - s.pad + kx;
                            if (ix >= 0 && ix < s.w) grow[ix] += srow[ox];
                        }
                    }
                }
            }
        }
    }
}

void conv2d_backward_data_fast(const ConvShape& s, const float* gy, const float* w, float* gx) {
    const int oh = s.out_h(), ow = s.out_w();
    const int pixels = oh * ow;
    const int k = s.cin * s.kh * s.kw;
    const size_t xplane = static_cast<size_t>(s.cin) * s.h * s.w;
    const size_t yplane = static_cast<size_t>(s.cout) * pixels;
    std::memset(gx, 0, sizeof(float) * s.n * xplane);
    const bool is_1x1 = (s.kh == 1 && s.kw == 1 && s.stride == 1 && s.pad == 0);
    const int rows_per = std::max(1, kChunkPixels / ow);
    if (!is_1x1) tl_col.resize(static_cast<size_t>(k) * std::min(oh, rows_per) * ow);

    for (int n = 0; n < s.n; ++n) {
        const float* gyn = gy + n * yplane;
        float* gxn = gx + n * xplane;
        for (int r0 = 0; r0 < oh; r0 += rows_per) {
            const int r1 = std::min(oh, r0 + rows_per);
            const int p0 = r0 * ow;
            const int chunk = (r1 - r0) * ow;
            if (is_1x1) {
                // gx[k x chunk] += w^T[k x cout] * gy[cout x chunk]
                cblas_sgemm(CblasRowMajor, CblasTrans, CblasNoTrans, k, chunk, s.cout, 1.f, w, k,
                            gyn + p0, pixels, 1.f, gxn + p0, pixels);
            } else {
                std::vector<float>& col = tl_col;
                cblas_sgemm(CblasRowMajor, CblasTrans, CblasNoTrans, k, chunk, s.cout, 1.f, w, k,
                            gyn + p0, pixels, 0.f, col.data(), chunk);
                col2im_rows(s, col.data(), r0, r1, gxn);
            }
        }
    }
}

void conv2d_backward_weights_serial(const ConvShape& s, const float* x, const float* gy,
                                    float* gw, float* gb) {
    const int oh = s.out_h(), ow = s.out_w();
    const size_t xplane = static_cast<size_t>(s.cin) * s.h * s.w;
    const size_t yplane = static_cast<size_t>(s.cout) * oh * ow;
    for (int n = 0; n < s.n; ++n) {
        const float* xn = x + n * xplane;
        const float* gyn = gy + n * yplane;
        for (int co = 0; co < s.cout; ++co) {
            float* gwc = gw + static_cast<size_t>(co) * s.cin * s.kh * s.kw;
            const float* gyc = gyn + static_cast<size_t>(co) * oh * ow;
            for (int oy = 0; oy < oh; ++oy) {
                for (int ox = 0; ox < ow; ++ox) {
                    const float g = gyc[static_cast<size_t>(oy) * ow + ox];
                    if (gb) gb[co] += g;
                    if (g == 0.f) continue;
                    for (int ci = 0; ci < s.cin; ++ci) {
                        const float* xc = xn + static_cast<size_t>(ci) * s.h * s.w;
                        float* gwk = gwc + static_cast<size_t>(ci) * s.kh * s.kw;
                        for (int ky = 0; ky < s.kh; ++ky) {
                            const int iy = oy * s.stride - s.pad + ky;
                            if (iy < 0 || iy >= s.h) continue;
                            for (int kx = 0; kx < s.kw; ++kx) {
                                const int ix = ox * s.stride - s.pad + kx;
                                if (ix < 0 || ix >= s.w) continue;
                                gwk[ky * s.kw + kx] += xc[static_cast<size_t>(iy) * s.w + ix] * g;
                            }
                        }
                    }
                }
            }
        }
    }
}

void conv2d_backward_weights_fast(const ConvShape& s, const float* x, const float* gy, float* gw,
                                  float* gb) {
    const int oh = s.out_h(), ow = s.out_w();
    const int pixels = oh * ow;
    const int k = s.cin * s.kh * s.kw;
    const size_t xplane = static_cast<size_t>(s.cin) * s.h * s.w;
    const size_t yplane = static_cast<size_t>(s.cout) * pixels;
    const bool is_1x1 = (s.kh == 1 && s.kw == 1 && s.stride == 1 && s.pad == 0);
    const int rows_per = std::max(1, kChunkPixels / ow);
    if (!is_1x1) tl_col.resize(static_cast<size_t>(k) * std::min(oh, rows_per) * ow);

    for (int n = 0; n < s.n; ++n) {
        const float* xn = x + n * xplane;
        const float* gyn = gy + n * yplane;
        for (int r0 = 0; r0 < oh; r0 += rows_per) {
            const int r1 = std::min(oh, r0 + rows_per);
            const int p0 = r0 * ow;
            const int chunk = (r1 - r0) * ow;
            const float* col = xn + p0;
            if (!is_1x1) {
                im2col_rows(s, xn, r0, r1, tl_col.data());
                col = tl_col.data();
            }
            // gw[cout x k] += gy[cout x chunk] * col^T[chunk x k]
            cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasTrans, s.cout, k, chunk, 1.f, gyn + p0,
                        pixels, col, is_1x1 ? pixels : chunk, 1.f, gw, k);
        }
        if (gb) {
            for (int co = 0; co < s.cout; ++co) {
                const float* gyc = gyn + static_cast<size_t>(co) * pixels;
                float acc = 0.f;
                for (int p = 0; p < pixels; ++p) acc += gyc[p];
                gb[co] += acc;
            }
        }
    }
}

}  // namespace

Backend backend() { return g_backend.load(std::memory_order_relaxed); }
void set_backend(Backend b) { g_backend.store(b, std::memory_order_relaxed); }

void conv2d_forward(const ConvShape& s, const float* x, const float* w, const float* bias,
                    float* y) {
    if (backend() == Backend::serial)
        conv2d_forward_serial(s, x, w, bias, y);
    else
        conv2d_forward_fast(s, x, w, bias, y);
}

void conv2d_backward_data(const ConvShape& s, const float* gy, const float* w, float* gx) {
    if (!gx) return;
    if (backend() == Backend::serial)
        conv2d_backward_data_serial(s, gy, w, gx);
    else
        conv2d_backward_data_fast(s, gy, w, gx);
}

void conv2d_backward_weights(const ConvShape& s, const float* x, const float* gy, float* gw,
                             float* gb) {
    if (backend() == Backend::serial)
        conv2d_backward_weights_serial(s, x, gy, gw, gb);
    else
        conv2d_backward_weights_fast(s, x, gy, gw, gb);
}

void leaky_relu_forward(const float* x, float* y, size_t n, float slope) {
#pragma omp parallel for schedule(static) if (backend() == Backend::parallel)
    for (ptrdiff_t i = 0; i < static_cast<ptrdiff_t>(n); ++i)
        y[i] = x[i] > 0.f ? x[i] : slope * x[i];
}

void leaky_relu_backward(const float* y, const float* gy, float* gx, size_t n, float slope) {
#pragma omp parallel for schedule(static) if (backend() == Backend::parallel)
    for (ptrdiff_t i = 0; i < static_cast<ptrdiff_t>(n); ++i)
        gx[i] = y[i] > 0.f ? gy[i] : slope * gy[i];
}

void add(const float* a, const float* b, float* y, size_t n) {
#pragma omp parallel for schedule(static) if (backend() == Backend::parallel)
    for (ptrdiff_t i = 0; i < static_cast<ptrdiff_t>(n); ++i) y[i] = a[i] + b[i];
}

void axpy(float alpha, const float* x, float* y, size_t n) {
#pragma omp parallel for schedule(static) if (backend() == Backend::parallel)
    for (ptrdiff_t i = 0; i < static_cast<ptrdiff_t>(n); ++i) y[i] += alpha * x[i];
}

void scale_add(const float* a, const float* b, float alpha, float* y, size_t n) {
#pragma omp parallel for schedule(static) if (backend() == Backend::parallel)
    for (ptrdiff_t i = 0; i < static_cast<ptrdiff_t>(n); ++i) y[i] = a[i] + alpha * b[i];
}

void maxpool2_forward(const float* x, int n, int c, int h, int w, float* y, unsigned char* idx) {
    const int oh = h / 2, ow = w / 2;
#pragma omp parallel for schedule(static) if (backend() == Backend::parallel)
    for (ptrdiff_t plane = 0; plane < static_cast<ptrdiff_t>(n) * c; ++plane) {
        const float* xp = x + plane * h * w;
        float* yp = y + plane * oh * ow;
        unsigned char* ip = idx + plane * oh * ow;
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                const int base = (oy * 2) * w + ox * 2;
                float best = xp[base];
                unsigned char bi = 0;
                const float cand1 = xp[base + 1];
                const float cand2 = xp[base + w];
                const float cand3 = xp[base + w + 1];
                if (cand1 > best) { best = cand1; bi = 1; }
                if (cand2 > best) { best = cand2; bi = 2; }
                if (cand3 > best) { best = cand3; bi = 3; }
                yp[oy * ow + ox] = best;
                ip[oy * ow + ox] = bi;
            }
        }
    }
}

void maxpool2_backward(const float* gy, const unsigned char* idx, int n, int c, int h, int w,
                       float* gx) {
    const int oh = h / 2, ow = w / 2;
    std::memset(gx, 0, sizeof(float) * n * c * h * w);
#pragma omp parallel for schedule(static) if (backend() == Backend::parallel)
    for (ptrdiff_t plane = 0; plane < static_cast<ptrdiff_t>(n) * c; ++plane) {
        const float* gyp = gy + plane * oh * ow;
        const unsigned char* ip = idx + plane * oh * ow;
        float* gxp = gx + plane * h * w;
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                const unsigned char bi = ip[oy * ow + ox];
                const int base = (oy * 2) * w + ox * 2;
                gxp[base + (bi & 1) + (bi >> 1) * w] += gyp[oy * ow + ox];
            }
        }
    }
}

void upsample_bilinear2_forward(const float* x, int n, int c, int h, int w, float* y) {
    const int oh = h * 2, ow = w * 2;
    // source coord for output i: (i + 0.5)/2 - 0.5 -> i/2 - 0.25
#pragma omp parallel for schedule(static) if (backend() == Backend::parallel)
    for (ptrdiff_t plane = 0; plane < static_cast<ptrdiff_t>(n) * c; ++plane) {
        const float* xp = x + plane * h * w;
        float* yp = y + plane * oh * ow;
        for (int oy = 0; oy < oh; ++oy) {
            const float sy = 0.5f * oy - 0.25f;
            int y0 = static_cast<int>(std::floor(sy));
            const float fy = sy - y0;
            const int y1 = std::min(std::max(y0 + 1, 0), h - 1);
            y0 = std::min(std::max(y0, 0), h - 1);
            for (int ox = 0; ox < ow; ++ox) {
                const float sx = 0.5f * ox - 0.25f;
                int x0 = static_cast<int>(std::floor(sx));
                const float fx = sx - x0;
                const int x1 = std::min(std::max(x0 + 1, 0), w - 1);
                x0 = std::min(std::max(x0, 0), w - 1);
                yp[oy * ow + ox] = (1 - fy) * ((1 - fx) * xp[y0 * w + x0] + fx * xp[y0 * w + x1]) +
                                   fy * ((1 - fx) * xp[y1 * w + x0] + fx * xp[y1 * w + x1]);
            }
        }
    }
}

void upsample_bilinear2_backward(const float* gy, int n, int c, int h, int w, float* gx) {
    const int oh = h * 2, ow = w * 2;
    std::memset(gx, 0, sizeof(float) * n * c * h * w);
#pragma omp parallel for schedule(static) if (backend() == Backend::parallel)
    for (ptrdiff_t plane = 0; plane < static_cast<ptrdiff_t>(n) * c; ++plane) {
        const float* gyp = gy + plane * oh * ow;
        float* gxp = gx + plane * h * w;
        for (int oy = 0; oy < oh; ++oy) {
            const float sy = 0.5f * oy - 0.25f;
            int y0 = static_cast<int>(std::floor(sy));
            const float fy = sy - y0;
            const int y1 = std::min(std::max(y0 + 1, 0), h - 1);
            y0 = std::min(std::max(y0, 0), h - 1);
            for (int ox = 0; ox < ow; ++ox) {
                const float sx = 0.5f * ox - 0.25f;
                int x0 = static_cast<int>(std::floor(sx));
                const float fx = sx - x0;
                const int x1 = std::min(std::max(x0 + 1, 0), w - 1);
                x0 = std::min(std::max(x0, 0), w - 1);
                const float g = gyp[oy * ow + ox];
                gxp[y0 * w + x0] += (1 - fy) * (1 - fx) * g;
                gxp[y0 * w + x1] += (1 - fy) * fx * g;
                gxp[y1 * w + x0] += fy * (1 - fx) * g;
                gxp[y1 * w + x1] += fy * fx * g;
            }
        }
    }
}

void upsample_nearest2_forward(const float* x, int n, int c, int h, int w, float* y) {
    const int ow = w * 2;
#pragma omp parallel for schedule(static) if (backend() == Backend::parallel)
    for (ptrdiff_t plane = 0; plane < static_cast<ptrdiff_t>(n) * c; ++plane) {
        const float* xp = x + plane * h * w;
        float* yp = y + plane * h * 2 * ow;
        for (int oy = 0; oy < h * 2; ++oy)
            for (int ox = 0; ox < ow; ++ox) yp[oy * ow + ox] = xp[(oy / 2) * w + ox / 2];
    }
}

void upsample_nearest2_backward(const float* gy, int n, int c, int h, int w, float* gx) {
    const int ow = w * 2;
#pragma omp parallel for schedule(static) if (backend() == Backend::parallel)
    for (ptrdiff_t plane = 0; plane < static_cast<ptrdiff_t>(n) * c; ++plane) {
        const float* gyp = gy + plane * h * 2 * ow;
        float* gxp = gx + plane * h * w;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                gxp[y * w + x] = gyp[(2 * y) * ow + 2 * x] + gyp[(2 * y) * ow + 2 * x + 1] +
                                 gyp[(2 * y + 1) * ow + 2 * x] + gyp[(2 * y + 1) * ow + 2 * x + 1];
            }
        }
    }
}

void softmax_channels(const float* x, float* p, int n, int c, size_t plane) {
#pragma omp parallel for schedule(static) if (backend() == Backend::parallel)
    for (ptrdiff_t ni = 0; ni < n; ++ni) {
        const float* xn = x + ni * c * plane;
        float* pn = p + ni * c * plane;
        for (size_t i = 0; i < plane; ++i) {
            float m = xn[i];
            for (int k = 1; k < c; ++k) m = std::max(m, xn[k * plane + i]);
            float sum = 0.f;
            for (int k = 0; k < c; ++k) {
                const float e = std::exp(xn[k * plane + i] - m);
                pn[k * plane + i] = e;
                sum += e;
            }
            const float inv = 1.f / sum;
            for (int k = 0; k < c; ++k) pn[k * plane + i] *= inv;
        }
    }
}

void softmax_backward(const float* p, const float* gp, float* gx, int n, int c, size_t plane) {
#pragma omp parallel for schedule(static) if (backend() == Backend::parallel)
    for (ptrdiff_t ni = 0; ni < n; ++ni) {
        const float* pn = p + ni * c * plane;
        const float* gpn = gp + ni * c * plane;
        float* gxn = gx + ni * c * plane;
        for (size_t i = 0; i < plane; ++i) {
            float dot = 0.f;
            for (int k = 0; k < c; ++k) dot += pn[k * plane + i] * gpn[k * plane + i];
            for (int k = 0; k < c; ++k)
                gxn[k * plane + i] = pn[k * plane + i] * (gpn[k * plane + i] - dot);
        }
    }
}

}  // namespace tonesr::nn::kernels
