#pragma once

#include <map>
#include <optional>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "tonesr/raster.hpp"

namespace tonesr {

enum class ToneKind { dot, stripe, grid, tile };

const char* to_string(ToneKind k);
ToneKind tone_kind_from_string(const std::string& s);

// Parametric description of one screentone pattern.
//   dot    — disks of diameter size_px on a square lattice of pitch size+gap,
//            lattice rotated by angle_deg
//   stripe — bands of width size_px running along angle_deg, pitch size+gap
//            across the band normal (angle_deg + 90)
//   grid   — ink union of two stripe fields at angle_deg and angle_deg + 90
//   tile   — a user tile raster stamped on the lattice (pitch = tile dims + gap)
struct ScreentoneSpec {
    int class_id = 1;
    ToneKind kind = ToneKind::dot;
    float size_px = 3.f;
    float gap_px = 3.f;
    float angle_deg = 0.f;
    float phase[2] = {0.f, 0.f};  // lattice origin offset in period units, [0,1)
    std::string tile_ref;         // required iff kind == tile

    float period() const { return size_px + gap_px; }
    void validate() const;  // throws std::invalid_argument
    bool operator==(const ScreentoneSpec& o) const;
};

nlohmann::ordered_json spec_to_json(const ScreentoneSpec& s);
ScreentoneSpec spec_from_json(const nlohmann::json& j);

// class_id -> spec. Loaded from a single JSON file; relative tile_ref paths
// are resolved against the registry file's directory.
struct ToneRegistry {
    std::map<int, ScreentoneSpec> classes;

    const ScreentoneSpec& at(int class_id) const;
    bool has(int class_id) const { return classes.count(class_id) != 0; }

    static ToneRegistry load(const std::string& path);
    void save(const std::string& path) const;
};

// Binds a spec (and its resolved tile raster) and answers per-pixel queries
// in page coordinates. Pixel (x, y) is probed at its center (x+.5, y+.5).
class TonePainter {
public:
    explicit TonePainter(const ScreentoneSpec& spec);
    TonePainter(const ScreentoneSpec& spec, Raster tile);

    bool ink(double cx, double cy) const;
    // Displacement from (cx, cy) to the center of the enclosing unit, page frame.
    void offset(double cx, double cy, float* dx, float* dy) const;

    const ScreentoneSpec& spec() const { return spec_; }

private:
    ScreentoneSpec spec_;
    Raster tile_;  // binarized user tile (tile kind only)
    double cos_ = 1.0, sin_ = 0.0;
    double period_ = 1.0;           // dot/stripe/grid
    double pitch_x_ = 1, pitch_y_ = 1;  // tile kind
};

}  // namespace tonesr
