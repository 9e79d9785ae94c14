#include "tonesr/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "tonesr/common.hpp"

namespace fs = std::filesystem;

namespace tonesr::pipeline {

std::vector<RegionCrop> crop_regions(const Raster& page, const ClassMask& corrected_mask,
                                     int pad, int stride_mult) {
    if (page.width != corrected_mask.width || page.height != corrected_mask.height)
        throw std::invalid_argument("crop_regions: mask not aligned to page");
    regionfix::ComponentSplit comps = regionfix::extract_components(corrected_mask);

    std::vector<RegionCrop> out;
    for (auto& region : comps.regions) {
        // corrected masks are uniform per component; take the label at the
        // first pixel of the component
        for (int y = region.y; y < region.y + region.h && !region.class_id; ++y)
            for (int x = region.x; x < region.x + region.w && !region.class_id; ++x)
                if (comps.map.label[static_cast<size_t>(y) * page.width + x] ==
                    region.component_id)
                    region.class_id = corrected_mask.at(x, y);

        RegionCrop rc;
        rc.region = region;
        rc.x0 = region.x - pad;
        rc.y0 = region.y - pad;
        rc.w = region.w + 2 * pad;
        rc.h = region.h + 2 * pad;
        rc.w = (rc.w + stride_mult - 1) / stride_mult * stride_mult;
        rc.h = (rc.h + stride_mult - 1) / stride_mult * stride_mult;
        rc.lr_crop = crop_reflect(page, rc.x0, rc.y0, rc.w, rc.h);
        out.push_back(std::move(rc));
    }
    return out;
}

BundleSet BundleSet::load_dir(const std::string& models_dir) {
    BundleSet set;
    if (!fs::is_directory(models_dir))
        throw ConfigError(models_dir + ": models directory not found");
    for (const auto& e : fs::directory_iterator(models_dir)) {
        if (!e.is_directory()) continue;
        const std::string name = e.path().filename().string();
        if (name == "seg") {
            set.seg = seg::SegModel::load(e.path().string());
        } else if (name == "base") {
            set.base = sr::SRModel::load(e.path().string());
        } else if (name.rfind("sr_class_", 0) == 0) {
            auto model = sr::SRModel::load(e.path().string());
            const int id = model->class_id();
            set.sr.emplace(id, std::move(model));
        }
    }
    if (!set.seg) throw ConfigError(models_dir + ": missing seg/ bundle");
    return set;
}

namespace {

// city-block distance to the complement of mask, clamped at cap
std::vector<int> chamfer_inside(const std::vector<uint8_t>& mask, int w, int h, int cap) {
    std::vector<int> d(mask.size());
    const int inf = cap + 1;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const size_t i = static_cast<size_t>(y) * w + x;
            if (!mask[i]) {
                d[i] = 0;
                continue;
            }
            int v = inf;
            if (x == 0 || y == 0) v = 1;
            if (x > 0) v = std::min(v, d[i - 1] + 1);
            if (y > 0) v = std::min(v, d[i - w] + 1);
            d[i] = std::min(v, inf);
        }
    }
    for (int y = h - 1; y >= 0; --y) {
        for (int x = w - 1; x >= 0; --x) {
            const size_t i = static_cast<size_t>(y) * w + x;
            if (!mask[i]) continue;
            int v = d[i];
            if (x == w - 1 || y == h - 1) v = std::min(v, 1);
            if (x < w - 1) v = std::min(v, d[i + 1] + 1);
            if (y < h - 1) v = std::min(v, d[i + w] + 1);
            d[i] = v;
        }
    }
    return d;
}

}  // namespace

UpscaleResult upscale_page(const Raster& page, const BundleSet& bundles,
                           const UpscaleOptions& opt) {
    if (!bundles.seg) throw ConfigError("upscale_page: segmentation bundle missing");
    const int s = opt.scale;
    for (const auto& [id, m] : bundles.sr)
        if (m->scale() != s)
            throw ConfigError("upscale_page: bundle for class " + std::to_string(id) +
                              " has scale " + std::to_string(m->scale()));
    if (bundles.base && bundles.base->scale() != s)
        throw ConfigError("upscale_page: base bundle scale mismatch");

    auto [raw_mask, prob] = bundles.seg->predict(page);
    ClassMask fixed =
        regionfix::correct_mask(raw_mask, opt.min_area, opt.drop_small_to_background);

    UpscaleResult result;
    result.hr_mask = nn_upsample(fixed, s);
    std::string base_kind;
    if (bundles.base) {
        result.hr = bundles.base->upscale(page);
        base_kind = "bundle";
    } else {
        result.hr = bicubic_upsample(page, s);
        base_kind = "bicubic";
    }

    regionfix::ComponentSplit comps = regionfix::extract_components(fixed);
    auto crops = crop_regions(page, fixed, opt.pad);

    result.report = nlohmann::ordered_json::object();
    result.report["width"] = page.width;
    result.report["height"] = page.height;
    result.report["scale"] = s;
    result.report["base"] = base_kind;
    result.report["regions"] = nlohmann::ordered_json::array();

    const int hw = page.width * s, hh = page.height * s;
    for (const auto& rc : crops) {
        nlohmann::ordered_json rr;
        rr["component_id"] = rc.region.component_id;
        rr["class_id"] = rc.region.class_id;
        rr["bbox"] = {rc.region.x, rc.region.y, rc.region.w, rc.region.h};

        auto it = bundles.sr.find(rc.region.class_id);
        if (it == bundles.sr.end()) {
            if (!opt.fallback_to_base)
                throw ConfigError("upscale_page: no SR bundle for class " +
                                  std::to_string(rc.region.class_id) +
                                  " and fallback to base is off");
            rr["bundle"] = "base";
            result.report["regions"].push_back(rr);
            continue;
        }
        rr["bundle"] = "sr_class_" + std::to_string(rc.region.class_id);

        const Raster sr_crop = it->second->upscale(rc.lr_crop);

        // region footprint at HR scale, local to the (padded) crop window
        const int lw = rc.w, lh = rc.h;
        std::vector<uint8_t> local(static_cast<size_t>(lw * s) * (lh * s), 0);
        for (int y = 0; y < lh; ++y) {
            const int py = rc.y0 + y;
            if (py < 0 || py >= page.height) continue;
            for (int x = 0; x < lw; ++x) {
                const int px = rc.x0 + x;
                if (px < 0 || px >= page.width) continue;
                if (comps.map.label[static_cast<size_t>(py) * page.width + px] !=
                    rc.region.component_id)
                    continue;
                for (int dy = 0; dy < s; ++dy)
                    for (int dx = 0; dx < s; ++dx)
                        local[(static_cast<size_t>(y) * s + dy) * (lw * s) + x * s + dx] = 1;
            }
        }
        const auto dist = chamfer_inside(local, lw * s, lh * s, opt.blend_px + 2);

        for (int y = 0; y < lh * s; ++y) {
            const int py = rc.y0 * s + y;
            if (py < 0 || py >= hh) continue;
            for (int x = 0; x < lw * s; ++x) {
                const int px = rc.x0 * s + x;
                if (px < 0 || px >= hw) continue;
                const size_t li = static_cast<size_t>(y) * (lw * s) + x;
                if (!local[li]) continue;
                // 1-px erosion plus a linear cross-fade over blend_px
                const double alpha =
                    std::clamp((dist[li] - 1.0) / opt.blend_px, 0.0, 1.0);
                if (alpha <= 0.0) continue;
                const double blended = alpha * sr_crop.at(x, y) +
                                       (1.0 - alpha) * result.hr.at(px, py);
                result.hr.at(px, py) =
                    static_cast<uint8_t>(std::clamp(std::lround(blended), 0l, 255l));
            }
        }

        if (opt.measure_regions && rc.region.w >= 24 && rc.region.h >= 24) {
            // measure density on the interior of the upscaled region
            const int mx = rc.region.x * s, my = rc.region.y * s;
            const int mw = rc.region.w * s, mh = rc.region.h * s;
            const int inset = 2 * s;
            Raster interior(std::max(1, mw - 2 * inset), std::max(1, mh - 2 * inset));
            for (int y = 0; y < interior.height; ++y)
                for (int x = 0; x < interior.width; ++x)
                    interior.at(x, y) = result.hr.at(
                        std::min(hw - 1, mx + inset + x), std::min(hh - 1, my + inset + y));
            analysis::DensityReport dr;
            if (opt.registry && opt.registry->has(rc.region.class_id))
                dr = analysis::measure_kind(interior,
                                            opt.registry->at(rc.region.class_id).kind);
            else
                dr = analysis::measure_auto(interior);
            rr["density"] = {{"kind", to_string(dr.kind)},
                             {"size_px", dr.size_px},
                             {"gap_px", dr.gap_px},
                             {"angle_deg", dr.angle_deg},
                             {"unit_area_px2", dr.unit_area_px2},
                             {"confidence", dr.confidence}};
        }
        result.report["regions"].push_back(rr);
    }
    return result;
}

}  // namespace tonesr::pipeline
