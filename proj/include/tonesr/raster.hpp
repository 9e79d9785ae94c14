#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace tonesr {

// 8-bit grayscale page: 0 = ink, 255 = paper.
struct Raster {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> pixels;  // row-major

    Raster() = default;
    Raster(int w, int h, uint8_t fill = 255)
        : width(w), height(h), pixels(static_cast<size_t>(w) * h, fill) {
        if (w < 1 || h < 1) throw std::invalid_argument("Raster: dims must be >= 1");
    }

    uint8_t& at(int x, int y) { return pixels[static_cast<size_t>(y) * width + x]; }
    uint8_t at(int x, int y) const { return pixels[static_cast<size_t>(y) * width + x]; }
    size_t size() const { return pixels.size(); }
    bool same_dims(const Raster& o) const { return width == o.width && height == o.height; }
};

// Per-pixel class ids aligned to a Raster. 0 = background/line art.
struct ClassMask {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> labels;

    ClassMask() = default;
    ClassMask(int w, int h, uint8_t fill = 0)
        : width(w), height(h), labels(static_cast<size_t>(w) * h, fill) {
        if (w < 1 || h < 1) throw std::invalid_argument("ClassMask: dims must be >= 1");
    }

    uint8_t& at(int x, int y) { return labels[static_cast<size_t>(y) * width + x]; }
    uint8_t at(int x, int y) const { return labels[static_cast<size_t>(y) * width + x]; }
    size_t size() const { return labels.size(); }
};

// Per-pixel displacement (pixels, signed) to the center of the enclosing
// screentone unit. Out-of-region pixels carry (0,0) with valid=0.
struct OffsetField {
    int width = 0;
    int height = 0;
    std::vector<float> dx, dy;
    std::vector<uint8_t> valid;

    OffsetField() = default;
    OffsetField(int w, int h)
        : width(w),
          height(h),
          dx(static_cast<size_t>(w) * h, 0.f),
          dy(static_cast<size_t>(w) * h, 0.f),
          valid(static_cast<size_t>(w) * h, 0) {}

    size_t idx(int x, int y) const { return static_cast<size_t>(y) * width + x; }
    size_t size() const { return dx.size(); }
};

// ---- raster ops (raster_ops.cpp) ----

// Box-mean downsample by integer factor, then threshold at 128 (ink < 128).
Raster box_downsample_binarize(const Raster& hr, int factor);

// Box-mean downsample to 8-bit gray (no threshold).
Raster box_downsample(const Raster& hr, int factor);

// Nearest-neighbor resampling for masks; down samples at block centers.
ClassMask nn_downsample(const ClassMask& hr, int factor);
ClassMask nn_upsample(const ClassMask& lr, int factor);
Raster nn_upsample(const Raster& lr, int factor);

// Catmull-Rom bicubic upscale by integer factor.
Raster bicubic_upsample(const Raster& lr, int factor);

Raster flip_h(const Raster& r);
Raster flip_v(const Raster& r);
ClassMask flip_h(const ClassMask& m);
ClassMask flip_v(const ClassMask& m);
// Flips negate the mirrored displacement component.
OffsetField flip_h(const OffsetField& f);
OffsetField flip_v(const OffsetField& f);

// Crop with edge-reflect padding for out-of-bounds areas.
Raster crop_reflect(const Raster& src, int x0, int y0, int w, int h);
ClassMask crop(const ClassMask& src, int x0, int y0, int w, int h);

}  // namespace tonesr
