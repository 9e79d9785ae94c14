#include "tonesr/screentone.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "tonesr/common.hpp"
#include "tonesr/image_io.hpp"

namespace fs = std::filesystem;

namespace tonesr {

const char* to_string(ToneKind k) {
    switch (k) {
        case ToneKind::dot: return "dot";
        case ToneKind::stripe: return "stripe";
        case ToneKind::grid: return "grid";
        case ToneKind::tile: return "tile";
    }
    return "?";
}

ToneKind tone_kind_from_string(const std::string& s) {
    if (s == "dot") return ToneKind::dot;
    if (s == "stripe") return ToneKind::stripe;
    if (s == "grid") return ToneKind::grid;
    if (s == "tile") return ToneKind::tile;
    throw std::invalid_argument("unknown screentone kind: " + s);
}

void ScreentoneSpec::validate() const {
    if (class_id < 1) throw std::invalid_argument("spec: class_id must be >= 1");
    if (!(size_px > 0.f)) throw std::invalid_argument("spec: size_px must be > 0");
    if (!(gap_px >= 0.f)) throw std::invalid_argument("spec: gap_px must be >= 0");
    if (!(size_px + gap_px > 0.f)) throw std::invalid_argument("spec: period must be > 0");
    if (!(angle_deg >= 0.f && angle_deg < 180.f))
        throw std::invalid_argument("spec: angle_deg must be in [0, 180)");
    for (float p : phase)
        if (!(p >= 0.f && p < 1.f)) throw std::invalid_argument("spec: phase must be in [0, 1)");
    if (kind == ToneKind::tile && tile_ref.empty())
        throw std::invalid_argument("spec: tile kind requires tile_ref");
    if (kind != ToneKind::tile && !tile_ref.empty())
        throw std::invalid_argument("spec: tile_ref is only valid for tile kind");
}

bool ScreentoneSpec::operator==(const ScreentoneSpec& o) const {
    return class_id == o.class_id && kind == o.kind && size_px == o.size_px &&
           gap_px == o.gap_px && angle_deg == o.angle_deg && phase[0] == o.phase[0] &&
           phase[1] == o.phase[1] && tile_ref == o.tile_ref;
}

nlohmann::ordered_json spec_to_json(const ScreentoneSpec& s) {
    nlohmann::ordered_json j;
    j["class_id"] = s.class_id;
    j["kind"] = to_string(s.kind);
    j["size_px"] = s.size_px;
    j["gap_px"] = s.gap_px;
    j["angle_deg"] = s.angle_deg;
    j["phase"] = {s.phase[0], s.phase[1]};
    if (!s.tile_ref.empty()) j["tile_ref"] = s.tile_ref;
    return j;
}

ScreentoneSpec spec_from_json(const nlohmann::json& j) {
    ScreentoneSpec s;
    s.class_id = j.at("class_id").get<int>();
    s.kind = tone_kind_from_string(j.at("kind").get<std::string>());
    s.size_px = j.at("size_px").get<float>();
    s.gap_px = j.at("gap_px").get<float>();
    s.angle_deg = j.at("angle_deg").get<float>();
    if (j.contains("phase")) {
        s.phase[0] = j["phase"][0].get<float>();
        s.phase[1] = j["phase"][1].get<float>();
    }
    if (j.contains("tile_ref")) s.tile_ref = j["tile_ref"].get<std::string>();
    s.validate();
    return s;
}

const ScreentoneSpec& ToneRegistry::at(int class_id) const {
    auto it = classes.find(class_id);
    if (it == classes.end())
        throw ConfigError("registry: no spec for class " + std::to_string(class_id));
    return it->second;
}

ToneRegistry ToneRegistry::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open registry");
    nlohmann::json j;
    in >> j;
    ToneRegistry reg;
    const fs::path base = fs::path(path).parent_path();
    for (const auto& jc : j.at("classes")) {
        ScreentoneSpec s = spec_from_json(jc);
        if (!s.tile_ref.empty() && fs::path(s.tile_ref).is_relative())
            s.tile_ref = (base / s.tile_ref).string();
        if (reg.classes.count(s.class_id))
            throw ConfigError("registry: duplicate class_id " + std::to_string(s.class_id));
        reg.classes.emplace(s.class_id, std::move(s));
    }
    if (reg.classes.empty()) throw ConfigError("registry: no classes defined");
    return reg;
}

void ToneRegistry::save(const std::string& path) const {
    nlohmann::ordered_json j;
    j["classes"] = nlohmann::ordered_json::array();
    for (const auto& [id, spec] : classes) j["classes"].push_back(spec_to_json(spec));
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path + ": cannot write registry");
    out << j.dump(2) << "\n";
}

namespace {

Raster load_tile(const ScreentoneSpec& spec) {
    Raster t = read_png(spec.tile_ref);
    if (t.width < 4 || t.height < 4)
        throw std::invalid_argument("tile_ref " + spec.tile_ref + ": tile must be at least 4x4");
    for (auto& p : t.pixels) p = (p < 128) ? 0 : 255;
    return t;
}

}  // namespace

TonePainter::TonePainter(const ScreentoneSpec& spec)
    : TonePainter(spec, spec.kind == ToneKind::tile ? load_tile(spec) : Raster()) {}

TonePainter::TonePainter(const ScreentoneSpec& spec, Raster tile)
    : spec_(spec), tile_(std::move(tile)) {
    spec_.validate();
    const double rad = spec_.angle_deg * M_PI / 180.0;
    cos_ = std::cos(rad);
    sin_ = std::sin(rad);
    period_ = spec_.period();
    if (spec_.kind == ToneKind::tile) {
        if (tile_.width < 4 || tile_.height < 4)
            throw std::invalid_argument("tile kind requires a tile raster of at least 4x4");
        pitch_x_ = tile_.width + spec_.gap_px;
        pitch_y_ = tile_.height + spec_.gap_px;
    }
}

bool TonePainter::ink(double cx, double cy) const {
    // rotate into the lattice frame
    const double a = cos_ * cx + sin_ * cy;
    const double b = -sin_ * cx + cos_ * cy;
    switch (spec_.kind) {
        case ToneKind::dot: {
            const double T = period_;
            const double i = std::floor(a / T - spec_.phase[0] + 0.5);
            const double j = std::floor(b / T - spec_.phase[1] + 0.5);
            const double da = a - (i + spec_.phase[0]) * T;
            const double db = b - (j + spec_.phase[1]) * T;
            const double r = spec_.size_px * 0.5;
            return da * da + db * db <= r * r;
        }
        case ToneKind::stripe: {
            const double T = period_;
            double t = b / T - spec_.phase[1];
            t -= std::floor(t);
            return t * T < spec_.size_px;
        }
        case ToneKind::grid: {
            const double T = period_;
            double ta = a / T - spec_.phase[0];
            ta -= std::floor(ta);
            double tb = b / T - spec_.phase[1];
            tb -= std::floor(tb);
            return ta * T < spec_.size_px || tb * T < spec_.size_px;
        }
        case ToneKind::tile: {
            const double ia = std::floor(a / pitch_x_ - spec_.phase[0]);
            const double jb = std::floor(b / pitch_y_ - spec_.phase[1]);
            const double la = a - (ia + spec_.phase[0]) * pitch_x_;
            const double lb = b - (jb + spec_.phase[1]) * pitch_y_;
            if (la >= tile_.width || lb >= tile_.height) return false;
            const int u = static_cast<int>(la);
            const int v = static_cast<int>(lb);
            return tile_.at(u, v) == 0;
        }
    }
    return false;
}

void TonePainter::offset(double cx, double cy, float* dx, float* dy) const {
    const double a = cos_ * cx + sin_ * cy;
    const double b = -sin_ * cx + cos_ * cy;
    double da = 0.0, db = 0.0;
    switch (spec_.kind) {
        case ToneKind::dot: {
            const double T = period_;
            const double i = std::floor(a / T - spec_.phase[0] + 0.5);
            const double j = std::floor(b / T - spec_.phase[1] + 0.5);
            da = (i + spec_.phase[0]) * T - a;
            db = (j + spec_.phase[1]) * T - b;
            break;
        }
        case ToneKind::stripe: {
            // across-stripe signed distance to the nearest band centerline;
            // the along-stripe component stays 0
            const double T = period_;
            const double c = spec_.size_px * 0.5;
            const double m = std::floor((b - spec_.phase[1] * T - c) / T + 0.5);
            db = m * T + spec_.phase[1] * T + c - b;
            da = 0.0;
            break;
        }
        case ToneKind::grid: {
            const double T = period_;
            const double c = spec_.size_px * 0.5;
            const double i = std::floor((a - spec_.phase[0] * T - c) / T + 0.5);
            const double j = std::floor((b - spec_.phase[1] * T - c) / T + 0.5);
            da = i * T + spec_.phase[0] * T + c - a;
            db = j * T + spec_.phase[1] * T + c - b;
            break;
        }
        case ToneKind::tile: {
            const double cx_t = tile_.width * 0.5;
            const double cy_t = tile_.height * 0.5;
            const double i = std::floor((a - spec_.phase[0] * pitch_x_ - cx_t) / pitch_x_ + 0.5);
            const double j = std::floor((b - spec_.phase[1] * pitch_y_ - cy_t) / pitch_y_ + 0.5);
            da = (i + spec_.phase[0]) * pitch_x_ + cx_t - a;
            db = (j + spec_.phase[1]) * pitch_y_ + cy_t - b;
            break;
        }
    }
    // rotate the displacement back into the page frame
    *dx = static_cast<float>(cos_ * da - sin_ * db);
    *dy = static_cast<float>(sin_ * da + cos_ * db);
}

}  // namespace tonesr
