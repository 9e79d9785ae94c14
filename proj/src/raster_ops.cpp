#include "tonesr/raster.hpp"

#include <algorithm>
#include <cmath>

namespace tonesr {

Raster box_downsample(const Raster& hr, int factor) {
    if (factor < 1 || hr.width % factor || hr.height % factor)
        throw std::invalid_argument("box_downsample: dims not divisible by factor");
    Raster lr(hr.width / factor, hr.height / factor);
    const int f2 = factor * factor;
    for (int y = 0; y < lr.height; ++y) {
        for (int x = 0; x < lr.width; ++x) {
            int acc = 0;
            for (int dy = 0; dy < factor; ++dy)
                for (int dx = 0; dx < factor; ++dx) acc += hr.at(x * factor + dx, y * factor + dy);
            lr.at(x, y) = static_cast<uint8_t>((acc + f2 / 2) / f2);
        }
    }
    return lr;
}

Raster box_downsample_binarize(const Raster& hr, int factor) {
    Raster lr = box_downsample(hr, factor);
    for (auto& p : lr.pixels) p = (p < 128) ? 0 : 255;
    return lr;
}

ClassMask nn_downsample(const ClassMask& hr, int factor) {
    if (factor < 1 || hr.width % factor || hr.height % factor)
        throw std::invalid_argument("nn_downsample: dims not divisible by factor");
    ClassMask lr(hr.width / factor, hr.height / factor);
    const int off = factor / 2;
    for (int y = 0; y < lr.height; ++y)
        for (int x = 0; x < lr.width; ++x) lr.at(x, y) = hr.at(x * factor + off, y * factor + off);
    return lr;
}

ClassMask nn_upsample(const ClassMask& lr, int factor) {
    ClassMask hr(lr.width * factor, lr.height * factor);
    for (int y = 0; y < hr.height; ++y)
        for (int x = 0; x < hr.width; ++x) hr.at(x, y) = lr.at(x / factor, y / factor);
    return hr;
}

Raster nn_upsample(const Raster& lr, int factor) {
    Raster hr(lr.width * factor, lr.height * factor);
    for (int y = 0; y < hr.height; ++y)
        for (int x = 0; x < hr.width; ++x) hr.at(x, y) = lr.at(x / factor, y / factor);
    return hr;
}

namespace {

inline double cubic_kernel(double t) {
    // Catmull-Rom (a = -0.5)
    const double a = -0.5;
    t = std::abs(t);
    if (t < 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
    if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
    return 0.0;
}

}  // namespace

Raster bicubic_upsample(const Raster& lr, int factor) {
    Raster hr(lr.width * factor, lr.height * factor);
    const double inv = 1.0 / factor;
    for (int y = 0; y < hr.height; ++y) {
        const double sy = (y + 0.5) * inv - 0.5;
        const int iy = static_cast<int>(std::floor(sy));
        const double fy = sy - iy;
        double wy[4];
        for (int k = 0; k < 4; ++k) wy[k] = cubic_kernel(fy - (k - 1));
        for (int x = 0; x < hr.width; ++x) {
            const double sx = (x + 0.5) * inv - 0.5;
            const int ix = static_cast<int>(std::floor(sx));
            const double fx = sx - ix;
            double acc = 0.0;
            for (int ky = 0; ky < 4; ++ky) {
                const int yy = std::clamp(iy + ky - 1, 0, lr.height - 1);
                double row = 0.0;
                for (int kx = 0; kx < 4; ++kx) {
                    const int xx = std::clamp(ix + kx - 1, 0, lr.width - 1);
                    row += cubic_kernel(fx - (kx - 1)) * lr.at(xx, yy);
                }
                acc += wy[ky] * row;
            }
            hr.at(x, y) = static_cast<uint8_t>(std::clamp(std::lround(acc), 0l, 255l));
        }
    }
    return hr;
}

Raster flip_h(const Raster& r) {
    Raster o(r.width, r.height);
    for (int y = 0; y < r.height; ++y)
        for (int x = 0; x < r.width; ++x) o.at(x, y) = r.at(r.width - 1 - x, y);
    return o;
}

Raster flip_v(const Raster& r) {
    Raster o(r.width, r.height);
    for (int y = 0; y < r.height; ++y)
        for (int x = 0; x < r.width; ++x) o.at(x, y) = r.at(x, r.height - 1 - y);
    return o;
}

ClassMask flip_h(const ClassMask& m) {
    ClassMask o(m.width, m.height);
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x) o.at(x, y) = m.at(m.width - 1 - x, y);
    return o;
}

ClassMask flip_v(const ClassMask& m) {
    ClassMask o(m.width, m.height);
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x) o.at(x, y) = m.at(x, m.height - 1 - y);
    return o;
}

OffsetField flip_h(const OffsetField& f) {
    OffsetField o(f.width, f.height);
    for (int y = 0; y < f.height; ++y) {
        for (int x = 0; x < f.width; ++x) {
            const size_t s = f.idx(f.width - 1 - x, y), d = o.idx(x, y);
            o.dx[d] = -f.dx[s];
            o.dy[d] = f.dy[s];
            o.valid[d] = f.valid[s];
        }
    }
    return o;
}

OffsetField flip_v(const OffsetField& f) {
    OffsetField o(f.width, f.height);
    for (int y = 0; y < f.height; ++y) {
        for (int x = 0; x < f.width; ++x) {
            const size_t s = f.idx(x, f.height - 1 - y), d = o.idx(x, y);
            o.dx[d] = f.dx[s];
            o.dy[d] = -f.dy[s];
            o.valid[d] = f.valid[s];
        }
    }
    return o;
}

namespace {

inline int reflect_index(int i, int n) {
    // reflect-101 (edge pixel not duplicated); degenerates safely for n == 1
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i = std::abs(i) % period;
    return (i < n) ? i : period - i;
}

}  // namespace

Raster crop_reflect(const Raster& src, int x0, int y0, int w, int h) {
    Raster out(w, h);
    for (int y = 0; y < h; ++y) {
        const int sy = reflect_index(y0 + y, src.height);
        for (int x = 0; x < w; ++x) out.at(x, y) = src.at(reflect_index(x0 + x, src.width), sy);
    }
    return out;
}

ClassMask crop(const ClassMask& src, int x0, int y0, int w, int h) {
    ClassMask out(w, h);
    for (int y = 0; y < h; ++y) {
        const int sy = std::clamp(y0 + y, 0, src.height - 1);
        for (int x = 0; x < w; ++x) {
            const int sx = std::clamp(x0 + x, 0, src.width - 1);
            out.at(x, y) = src.at(sx, sy);
        }
    }
    return out;
}

}  // namespace tonesr
