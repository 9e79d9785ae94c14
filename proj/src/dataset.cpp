#include "tonesr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "tonesr/common.hpp"
#include "tonesr/image_io.hpp"

namespace fs = std::filesystem;

namespace tonesr {

std::vector<ManifestRow> load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open manifest");
    const fs::path base = fs::path(path).parent_path();
    auto resolve = [&](const std::string& p) {
        return fs::path(p).is_absolute() ? p : (base / p).string();
    };
    std::vector<ManifestRow> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        ManifestRow r;
        r.lr = resolve(j.at("lr").get<std::string>());
        r.hr = resolve(j.at("hr").get<std::string>());
        r.mask_lr = resolve(j.at("mask_lr").get<std::string>());
        r.mask_hr = resolve(j.at("mask_hr").get<std::string>());
        if (j.contains("offsets_hr") && !j["offsets_hr"].is_null())
            r.offsets_hr = resolve(j["offsets_hr"].get<std::string>());
        r.split = j.at("split").get<std::string>();
        r.hflip = j.value("hflip", false);
        r.vflip = j.value("vflip", false);
        for (const auto& js : j.at("specs")) r.specs.push_back(spec_from_json(js));
        rows.push_back(std::move(r));
    }
    return rows;
}

ScreentoneSpec jitter_spec(const ScreentoneSpec& base, const DatasetOptions& opt, Rng& rng) {
    ScreentoneSpec s = base;
    if (s.kind != ToneKind::tile) {
        if (opt.jitter_size_rel > 0)
            s.size_px = std::max(1.0f, s.size_px * rng.uniform_f(1.f - opt.jitter_size_rel,
                                                                 1.f + opt.jitter_size_rel));
        if (opt.jitter_gap_rel > 0)
            s.gap_px = std::max(0.0f, s.gap_px * rng.uniform_f(1.f - opt.jitter_gap_rel,
                                                               1.f + opt.jitter_gap_rel));
    } else if (opt.jitter_gap_rel > 0) {
        s.gap_px = std::max(0.0f, s.gap_px * rng.uniform_f(1.f - opt.jitter_gap_rel,
                                                           1.f + opt.jitter_gap_rel));
    }
    if (opt.jitter_angle_deg > 0) {
        float a = s.angle_deg + rng.uniform_f(-opt.jitter_angle_deg, opt.jitter_angle_deg);
        a = std::fmod(a + 360.f, 180.f);
        s.angle_deg = a;
    }
    s.phase[0] = rng.uniform_f(0.f, 1.f);
    s.phase[1] = rng.uniform_f(0.f, 1.f);
    // keep round numbers out of the serialized record
    s.size_px = std::round(s.size_px * 100.f) / 100.f;
    s.gap_px = std::round(s.gap_px * 100.f) / 100.f;
    s.angle_deg = std::round(s.angle_deg * 100.f) / 100.f;
    if (s.angle_deg >= 180.f) s.angle_deg = 0.f;
    s.phase[0] = std::round(s.phase[0] * 1000.f) / 1000.f;
    s.phase[1] = std::round(s.phase[1] * 1000.f) / 1000.f;
    if (s.phase[0] >= 1.f) s.phase[0] = 0.f;
    if (s.phase[1] >= 1.f) s.phase[1] = 0.f;
    return s;
}

namespace {

struct PageSource {
    // procedural, or listing of <name>.png + <name>_regions.png pairs
    std::vector<std::pair<std::string, std::string>> files;

    explicit PageSource(const std::string& dir) {
        if (dir.empty()) return;
        std::vector<std::string> names;
        for (const auto& e : fs::directory_iterator(dir)) {
            const std::string n = e.path().filename().string();
            if (n.size() > 4 && n.ends_with(".png") && n.find("_regions") == std::string::npos)
                names.push_back(e.path().string());
        }
        std::sort(names.begin(), names.end());
        for (const auto& n : names) {
            std::string m = n.substr(0, n.size() - 4) + "_regions.png";
            if (fs::exists(m)) files.emplace_back(n, m);
        }
        if (files.empty())
            throw ConfigError(dir + ": no line drawing with region mask found");
    }
};

}  // namespace

std::string build_dataset(const ToneRegistry& registry, const DatasetOptions& opt,
                          const std::string& out_dir) {
    if (opt.count < 1) throw ConfigError("build_dataset: count must be >= 1");
    std::vector<int> class_ids = opt.class_filter;
    if (class_ids.empty())
        for (const auto& [id, s] : registry.classes) class_ids.push_back(id);
    for (int id : class_ids) registry.at(id);  // throws on unknown ids
    if (class_ids.empty()) throw ConfigError("build_dataset: no classes selected");

    PageSource source(opt.lineart_dir);
    for (const char* sub : {"lr", "hr", "mask_lr", "mask_hr", "offsets"})
        fs::create_directories(fs::path(out_dir) / sub);

    std::ofstream manifest(fs::path(out_dir) / "manifest.jsonl");
    if (!manifest) throw std::runtime_error(out_dir + ": cannot write manifest");

    const int master = opt.hr_size + 64;
    for (int i = 0; i < opt.count; ++i) {
        Rng rng = Rng::stream(opt.seed, "sample", static_cast<uint64_t>(i));

        Raster art;
        ClassMask regions;
        if (source.files.empty()) {
            auto page = synth::make_lineart(master, master, rng, opt.lineart);
            art = std::move(page.line_art);
            regions = std::move(page.regions);
        } else {
            const auto& [ap, mp] = source.files[rng.uniform_int(source.files.size())];
            art = read_png(ap);
            regions = read_mask_png(mp);
            if (art.width < opt.hr_size || art.height < opt.hr_size)
                throw ConfigError(ap + ": page smaller than hr_size");
        }

        // random crop displacement
        const int cx = static_cast<int>(rng.uniform_int(art.width - opt.hr_size + 1));
        const int cy = static_cast<int>(rng.uniform_int(art.height - opt.hr_size + 1));
        Raster art_c = crop_reflect(art, cx, cy, opt.hr_size, opt.hr_size);
        ClassMask reg_c = crop(regions, cx, cy, opt.hr_size, opt.hr_size);

        // map surviving region ids to jittered class specs
        std::vector<bool> present(256, false);
        for (auto l : reg_c.labels) present[l] = true;
        std::map<int, ScreentoneSpec> specs;
        ClassMask mask(reg_c.width, reg_c.height, 0);
        std::map<int, int> region_to_class;
        int slot = 0;
        for (int id = 1; id < 256; ++id) {
            if (!present[id]) continue;
            const int cls =
                class_ids[(static_cast<size_t>(i) + slot) % class_ids.size()];
            ++slot;
            region_to_class[id] = cls;
            if (!specs.count(cls)) specs.emplace(cls, jitter_spec(registry.at(cls), opt, rng));
        }
        for (size_t p = 0; p < reg_c.labels.size(); ++p)
            if (reg_c.labels[p]) mask.labels[p] = static_cast<uint8_t>(region_to_class[reg_c.labels[p]]);

        synth::TrainSample s = synth::make_pair(art_c, mask, specs, opt.scale);

        if (opt.flips) {
            s.hflip = rng.chance(0.5);
            s.vflip = rng.chance(0.5);
            if (s.hflip) {
                s.lr = flip_h(s.lr);
                s.hr = flip_h(s.hr);
                s.mask_lr = flip_h(s.mask_lr);
                s.mask_hr = flip_h(s.mask_hr);
                s.offsets_hr = flip_h(s.offsets_hr);
            }
            if (s.vflip) {
                s.lr = flip_v(s.lr);
                s.hr = flip_v(s.hr);
                s.mask_lr = flip_v(s.mask_lr);
                s.mask_hr = flip_v(s.mask_hr);
                s.offsets_hr = flip_v(s.offsets_hr);
            }
        }

        char name[32];
        snprintf(name, sizeof(name), "%06d", i);
        const std::string id(name);
        write_png((fs::path(out_dir) / "lr" / (id + ".png")).string(), s.lr);
        write_png((fs::path(out_dir) / "hr" / (id + ".png")).string(), s.hr);
        write_mask_png((fs::path(out_dir) / "mask_lr" / (id + ".png")).string(), s.mask_lr);
        write_mask_png((fs::path(out_dir) / "mask_hr" / (id + ".png")).string(), s.mask_hr);
        if (opt.with_offsets)
            write_stof((fs::path(out_dir) / "offsets" / (id + ".stof")).string(), s.offsets_hr);

        nlohmann::ordered_json row;
        row["lr"] = "lr/" + id + ".png";
        row["hr"] = "hr/" + id + ".png";
        row["mask_lr"] = "mask_lr/" + id + ".png";
        row["mask_hr"] = "mask_hr/" + id + ".png";
        row["offsets_hr"] =
            opt.with_offsets ? nlohmann::ordered_json("offsets/" + id + ".stof")
                             : nlohmann::ordered_json(nullptr);
        row["split"] = (i % 10 == 9) ? "test" : "train";
        row["hflip"] = s.hflip;
        row["vflip"] = s.vflip;
        row["specs"] = nlohmann::ordered_json::array();
        for (const auto& sp : s.specs) row["specs"].push_back(spec_to_json(sp));
        manifest << row.dump() << "\n";
    }
    manifest.close();
    return (fs::path(out_dir) / "manifest.jsonl").string();
}

synth::TrainSample load_sample(const ManifestRow& row, bool with_offsets) {
    synth::TrainSample s;
    s.lr = read_png(row.lr);
    s.hr = read_png(row.hr);
    s.mask_lr = read_mask_png(row.mask_lr);
    s.mask_hr = read_mask_png(row.mask_hr);
    if (with_offsets) {
        if (row.offsets_hr.empty())
            throw ConfigError(row.hr + ": sample has no offset field on disk");
        s.offsets_hr = read_stof(row.offsets_hr);
    }
    s.specs = row.specs;
    s.hflip = row.hflip;
    s.vflip = row.vflip;
    return s;
}

}  // namespace tonesr
