#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tonesr/analysis.hpp"
#include "tonesr/regionfix.hpp"
#include "tonesr/seg.hpp"
#include "tonesr/sr.hpp"

namespace tonesr::pipeline {

struct RegionCrop {
    regionfix::Region region;  // class_id filled from the corrected mask
    int x0 = 0, y0 = 0, w = 0, h = 0;  // crop window in page coords (may overhang)
    Raster lr_crop;                    // reflect-padded extraction
};

// One crop per corrected-mask region: bbox expanded by pad, dims rounded up
// to a multiple of stride_mult, border overhang realized by reflection.
std::vector<RegionCrop> crop_regions(const Raster& page, const ClassMask& corrected_mask,
                                     int pad, int stride_mult = 16);

// Trained bundles for one upscale job. sr maps class_id -> model; base is
// the whole-page model (bicubic fallback when absent).
struct BundleSet {
    std::unique_ptr<seg::SegModel> seg;
    std::map<int, std::unique_ptr<sr::SRModel>> sr;
    std::unique_ptr<sr::SRModel> base;

    // Scans dir for seg/, sr_class_<k>/, base/ bundles.
    static BundleSet load_dir(const std::string& models_dir);
};

struct UpscaleOptions {
    int scale = 4;
    int pad = 16;
    int min_area = 25;
    bool drop_small_to_background = false;
    int blend_px = 2;            // cross-fade span after the 1-px erosion
    bool fallback_to_base = false;  // regions without a class bundle keep base pixels
    const ToneRegistry* registry = nullptr;  // used to pick measurement kinds
    bool measure_regions = true;
};

struct UpscaleResult {
    Raster hr;
    ClassMask hr_mask;
    nlohmann::ordered_json report;
};

UpscaleResult upscale_page(const Raster& page, const BundleSet& bundles,
                           const UpscaleOptions& opt);

}  // namespace tonesr::pipeline
