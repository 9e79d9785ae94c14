#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <utility>

#include "tonesr/raster.hpp"
#include "tonesr/screentone.hpp"

namespace tonesr::analysis {

struct Bbox {
    int x = 0, y = 0, w = 0, h = 0;
};

// Measured pattern parameters with residual confidence. For dot/stripe/grid
// kinds size/gap/angle are populated; for complex patterns unit_area_px2.
struct DensityReport {
    ToneKind kind = ToneKind::dot;
    double size_px = 0, gap_px = 0, angle_deg = 0;
    double unit_area_px2 = 0;
    double confidence = 0;  // autocorrelation peak prominence, [0,1]
    Bbox roi;
};

// Two shortest linearly independent autocorrelation peaks (subpixel refined).
struct LatticePeaks {
    bool has_v1 = false, has_v2 = false;
    double v1x = 0, v1y = 0, v2x = 0, v2y = 0;
    double prom1 = 0, prom2 = 0;
};

LatticePeaks detect_lattice(const Raster& region);

DensityReport measure_dots(const Raster& region);
DensityReport measure_stripes(const Raster& region);  // handles stripe and grid
DensityReport measure_unit_area(const Raster& region, const Bbox* roi = nullptr);

// Heuristic kind detection used by `measure --kind auto`.
ToneKind detect_kind(const Raster& region);
DensityReport measure_auto(const Raster& region);
DensityReport measure_kind(const Raster& region, ToneKind kind);

// ---- LBP baseline classifier ----

struct LbpModel {
    int radius = 1;
    int neighbors = 8;
    std::map<int, std::array<double, 10>> histograms;  // riu2 bins, normalized

    void save(const std::string& path) const;
    static LbpModel load(const std::string& path);
};

std::array<double, 10> lbp_histogram(const Raster& region);
double chi_square(const std::array<double, 10>& a, const std::array<double, 10>& b);

// Nearest reference histogram by chi-square distance.
std::pair<int, double> lbp_classify(const LbpModel& model, const Raster& region);

struct LbpTrainOptions {
    int windows_per_class = 32;
    int window = 64;
    uint64_t seed = 99;
    float jitter_size_rel = 0.f, jitter_gap_rel = 0.f, jitter_angle_deg = 0.f;
};

LbpModel lbp_train(const ToneRegistry& registry, const LbpTrainOptions& opt);

}  // namespace tonesr::analysis
