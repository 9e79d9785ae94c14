#pragma once

#include <map>
#include <string>
#include <vector>

#include "tonesr/raster.hpp"
#include "tonesr/rng.hpp"
#include "tonesr/screentone.hpp"

namespace tonesr::synth {

// Render one pattern on a blank page of the given size. Binary output.
Raster render_tile(const ScreentoneSpec& spec, int width, int height);

// Ground-truth displacement field for the same render. Every pixel is valid.
OffsetField analytic_offsets(const ScreentoneSpec& spec, int width, int height);

struct FillResult {
    Raster page;
    OffsetField offsets;  // valid exactly on mask-labeled pixels
};

// Composite (ink-min) each labeled region with its class pattern. Patterns
// are sampled in page coordinates, so same-class regions share one lattice.
FillResult fill_page(const Raster& line_art, const ClassMask& region_mask,
                     const std::map<int, ScreentoneSpec>& specs);

struct TrainSample {
    Raster lr, hr;
    ClassMask mask_lr, mask_hr;
    OffsetField offsets_hr;
    std::vector<ScreentoneSpec> specs;
    bool hflip = false, vflip = false;
};

// Fill LR and HR variants of one page with the same pixel-period specs.
// LR line art is the box-mean downsample of the HR line art, re-binarized at
// 128; the LR mask is the nearest-neighbor downsample.
TrainSample make_pair(const Raster& line_art_hr, const ClassMask& region_mask_hr,
                      const std::map<int, ScreentoneSpec>& specs, int scale);

// ---- procedural line drawings ----

struct LineArtOptions {
    int min_regions = 2, max_regions = 4;
    int min_strokes = 1, max_strokes = 4;
    int outline_px = 3;
    double frame_prob = 0.5;
};

struct LineArtPage {
    Raster line_art;    // binary strokes on white
    ClassMask regions;  // region ids 1..region_count, 0 elsewhere (incl. ink)
    int region_count = 0;
};

LineArtPage make_lineart(int width, int height, Rng& rng, const LineArtOptions& opt = {});

}  // namespace tonesr::synth
