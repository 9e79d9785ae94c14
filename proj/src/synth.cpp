#include "tonesr/synth.hpp"

#include <omp.h>

#include <cmath>
#include <memory>

#include "tonesr/common.hpp"

namespace tonesr::synth {

Raster render_tile(const ScreentoneSpec& spec, int width, int height) {
    if (width < 1 || height < 1) throw std::invalid_argument("render_tile: dims must be >= 1");
    TonePainter painter(spec);
    Raster out(width, height, 255);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            if (painter.ink(x + 0.5, y + 0.5)) out.at(x, y) = 0;
    return out;
}

OffsetField analytic_offsets(const ScreentoneSpec& spec, int width, int height) {
    TonePainter painter(spec);
    OffsetField f(width, height);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const size_t i = f.idx(x, y);
            painter.offset(x + 0.5, y + 0.5, &f.dx[i], &f.dy[i]);
            f.valid[i] = 1;
        }
    }
    return f;
}

FillResult fill_page(const Raster& line_art, const ClassMask& region_mask,
                     const std::map<int, ScreentoneSpec>& specs) {
    if (line_art.width != region_mask.width || line_art.height != region_mask.height)
        throw std::invalid_argument("fill_page: mask not aligned to line art");

    // one painter per label present
    std::map<int, std::unique_ptr<TonePainter>> painters;
    for (auto l : region_mask.labels) {
        if (l == 0 || painters.count(l)) continue;
        auto it = specs.find(l);
        if (it == specs.end())
            throw ConfigError("fill_page: no spec for present label " + std::to_string(l));
        painters.emplace(l, std::make_unique<TonePainter>(it->second));
    }

    FillResult r;
    r.page = line_art;
    r.offsets = OffsetField(line_art.width, line_art.height);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < line_art.height; ++y) {
        for (int x = 0; x < line_art.width; ++x) {
            const uint8_t label = region_mask.at(x, y);
            if (label == 0) continue;
            const TonePainter& p = *painters.at(label);
            const size_t i = r.offsets.idx(x, y);
            if (p.ink(x + 0.5, y + 0.5)) r.page.at(x, y) = 0;  // ink-min with line art
            p.offset(x + 0.5, y + 0.5, &r.offsets.dx[i], &r.offsets.dy[i]);
            r.offsets.valid[i] = 1;
        }
    }
    return r;
}

TrainSample make_pair(const Raster& line_art_hr, const ClassMask& region_mask_hr,
                      const std::map<int, ScreentoneSpec>& specs, int scale) {
    if (scale != 2 && scale != 4) throw std::invalid_argument("make_pair: scale must be 2 or 4");
    if (line_art_hr.width % scale || line_art_hr.height % scale)
        throw std::invalid_argument("make_pair: HR dims must be divisible by scale");

    TrainSample s;
    s.mask_hr = region_mask_hr;
    s.mask_lr = nn_downsample(region_mask_hr, scale);
    const Raster line_lr = box_downsample_binarize(line_art_hr, scale);

    FillResult hr = fill_page(line_art_hr, region_mask_hr, specs);
    FillResult lr = fill_page(line_lr, s.mask_lr, specs);
    s.hr = std::move(hr.page);
    s.offsets_hr = std::move(hr.offsets);
    s.lr = std::move(lr.page);
    std::vector<bool> present(256, false);
    for (auto l : region_mask_hr.labels) present[l] = true;
    for (const auto& [id, spec] : specs)
        if (present[static_cast<uint8_t>(id)]) s.specs.push_back(spec);
    return s;
}

// ---- procedural line drawings ----

namespace {

struct Shape {
    // 0 = rotated rect, 1 = ellipse
    int type = 0;
    double cx = 0, cy = 0, hw = 0, hh = 0, cos_t = 1, sin_t = 0;

    bool inside(double x, double y, double shrink) const {
        const double dx = x - cx, dy = y - cy;
        const double u = cos_t * dx + sin_t * dy;
        const double v = -sin_t * dx + cos_t * dy;
        const double a = hw - shrink, b = hh - shrink;
        if (a <= 0 || b <= 0) return false;
        if (type == 0) return std::abs(u) < a && std::abs(v) < b;
        const double eu = u / a, ev = v / b;
        return eu * eu + ev * ev < 1.0;
    }

    void bbox(int w, int h, int* x0, int* y0, int* x1, int* y1) const {
        const double r = std::hypot(hw, hh) + 1;
        *x0 = std::max(0, static_cast<int>(cx - r));
        *y0 = std::max(0, static_cast<int>(cy - r));
        *x1 = std::min(w - 1, static_cast<int>(cx + r) + 1);
        *y1 = std::min(h - 1, static_cast<int>(cy + r) + 1);
    }
};

void stamp_segment(Raster& art, ClassMask& regions, double x0, double y0, double x1, double y1,
                   double radius) {
    const int bx0 = std::max(0, static_cast<int>(std::min(x0, x1) - radius - 1));
    const int by0 = std::max(0, static_cast<int>(std::min(y0, y1) - radius - 1));
    const int bx1 = std::min(art.width - 1, static_cast<int>(std::max(x0, x1) + radius + 1));
    const int by1 = std::min(art.height - 1, static_cast<int>(std::max(y0, y1) + radius + 1));
    const double vx = x1 - x0, vy = y1 - y0;
    const double len2 = vx * vx + vy * vy;
    for (int y = by0; y <= by1; ++y) {
        for (int x = bx0; x <= bx1; ++x) {
            const double px = x + 0.5 - x0, py = y + 0.5 - y0;
            double t = len2 > 0 ? (px * vx + py * vy) / len2 : 0.0;
            t = std::clamp(t, 0.0, 1.0);
            const double ddx = px - t * vx, ddy = py - t * vy;
            if (ddx * ddx + ddy * ddy <= radius * radius) {
                art.at(x, y) = 0;
                regions.at(x, y) = 0;
            }
        }
    }
}

}  // namespace

LineArtPage make_lineart(int width, int height, Rng& rng, const LineArtOptions& opt) {
    LineArtPage page;
    page.line_art = Raster(width, height, 255);
    page.regions = ClassMask(width, height, 0);

    if (rng.chance(opt.frame_prob)) {
        const int inset = rng.range(3, 8);
        const int lw = rng.range(2, 3);
        for (int y = inset; y < height - inset; ++y) {
            for (int x = inset; x < width - inset; ++x) {
                const bool border = x < inset + lw || x >= width - inset - lw || y < inset + lw ||
                                    y >= height - inset - lw;
                if (border) page.line_art.at(x, y) = 0;
            }
        }
    }

    const int target = rng.range(opt.min_regions, opt.max_regions);
    std::vector<Shape> shapes;
    const double mindim = std::min(width, height);
    for (int s = 0; s < target; ++s) {
        for (int attempt = 0; attempt < 24; ++attempt) {
            Shape sh;
            sh.type = rng.range(0, 1);
            sh.hw = rng.uniform(0.14, 0.30) * mindim;
            sh.hh = rng.uniform(0.14, 0.30) * mindim;
            sh.cx = rng.uniform(sh.hw + 4, width - sh.hw - 4);
            sh.cy = rng.uniform(sh.hh + 4, height - sh.hh - 4);
            const double theta = rng.uniform(0, M_PI);
            sh.cos_t = std::cos(theta);
            sh.sin_t = std::sin(theta);
            bool clash = false;
            for (const auto& other : shapes) {
                const double d = std::hypot(sh.cx - other.cx, sh.cy - other.cy);
                if (d < std::hypot(sh.hw, sh.hh) + std::hypot(other.hw, other.hh) + 3) {
                    clash = true;
                    break;
                }
            }
            if (clash) continue;
            shapes.push_back(sh);
            break;
        }
    }

    page.region_count = static_cast<int>(shapes.size());
    for (size_t s = 0; s < shapes.size(); ++s) {
        const Shape& sh = shapes[s];
        int x0, y0, x1, y1;
        sh.bbox(width, height, &x0, &y0, &x1, &y1);
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const double cx = x + 0.5, cy = y + 0.5;
                if (!sh.inside(cx, cy, 0)) continue;
                if (sh.inside(cx, cy, opt.outline_px)) {
                    page.regions.at(x, y) = static_cast<uint8_t>(s + 1);
                } else {
                    page.line_art.at(x, y) = 0;  // outline ring
                }
            }
        }
    }

    const int strokes = rng.range(opt.min_strokes, opt.max_strokes);
    for (int k = 0; k < strokes; ++k) {
        // polyline of 2-3 segments wandering across the page
        double x = rng.uniform(0, width), y = rng.uniform(0, height);
        const double radius = rng.uniform(1.0, 1.6);
        const int segs = rng.range(2, 3);
        for (int sgi = 0; sgi < segs; ++sgi) {
            const double nx = rng.uniform(0, width), ny = rng.uniform(0, height);
            stamp_segment(page.line_art, page.regions, x, y, nx, ny, radius);
            x = nx;
            y = ny;
        }
    }
    return page;
}

}  // namespace tonesr::synth
