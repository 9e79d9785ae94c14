#pragma once

#include <string>
#include <vector>

#include "tonesr/screentone.hpp"
#include "tonesr/synth.hpp"

namespace tonesr {

struct ManifestRow {
    std::string lr, hr, mask_lr, mask_hr, offsets_hr;  // paths, resolved
    std::string split;                                 // "train" | "test"
    bool hflip = false, vflip = false;
    std::vector<ScreentoneSpec> specs;

    bool has_class(int class_id) const {
        for (const auto& s : specs)
            if (s.class_id == class_id) return true;
        return false;
    }
};

std::vector<ManifestRow> load_manifest(const std::string& path);

struct DatasetOptions {
    int count = 100;
    int scale = 4;
    int hr_size = 256;
    uint64_t seed = 1;
    bool with_offsets = true;
    bool flips = true;
    // jitter around each class's registry spec
    float jitter_size_rel = 0.f;
    float jitter_gap_rel = 0.f;
    float jitter_angle_deg = 0.f;
    std::vector<int> class_filter;  // empty = all registry classes
    std::string lineart_dir;        // optional page source (X.png + X_regions.png)
    synth::LineArtOptions lineart;
};

// Apply the dataset's parameter jitter to one class spec.
ScreentoneSpec jitter_spec(const ScreentoneSpec& base, const DatasetOptions& opt, Rng& rng);

// Writes count TrainSamples plus a JSON-lines manifest (10% test split) under
// out_dir. Deterministic for a fixed seed. Returns the manifest path.
std::string build_dataset(const ToneRegistry& registry, const DatasetOptions& opt,
                          const std::string& out_dir);

// Load a sample's rasters from a manifest row.
synth::TrainSample load_sample(const ManifestRow& row, bool with_offsets);

}  // namespace tonesr
