#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "tonesr/analysis.hpp"
#include "tonesr/common.hpp"
#include "tonesr/dataset.hpp"
#include "tonesr/defaults.hpp"
#include "tonesr/image_io.hpp"

namespace fs = std::filesystem;
using namespace tonesr;

namespace {

uint64_t hash_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return fnv1a64(data);
}

uint64_t hash_tree(const fs::path& root) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& f : files) {
        h = fnv1a64(fs::relative(f, root).string(), h);
        const uint64_t fh = hash_file(f);
        h = fnv1a64(&fh, sizeof(fh), h);
    }
    return h;
}

}  // namespace

TEST_CASE("build_dataset is byte-identical under a fixed seed") {
    const std::string reg_dir = "ds_test_assets";
    ToneRegistry reg = ToneRegistry::load(write_default_registry(reg_dir));
    DatasetOptions opt;
    opt.count = 6;
    opt.seed = 7;
    opt.hr_size = 128;
    opt.jitter_size_rel = 0.1f;
    opt.jitter_angle_deg = 8.f;
    fs::remove_all("ds_a");
    fs::remove_all("ds_b");
    build_dataset(reg, opt, "ds_a");
    build_dataset(reg, opt, "ds_b");
    CHECK(hash_tree("ds_a") == hash_tree("ds_b"));

    DatasetOptions other = opt;
    other.seed = 8;
    fs::remove_all("ds_c");
    build_dataset(reg, other, "ds_c");
    CHECK(hash_tree("ds_a") != hash_tree("ds_c"));
}

TEST_CASE("manifest split is 10 percent test") {
    const std::string reg_dir = "ds_test_assets";
    ToneRegistry reg = ToneRegistry::load(write_default_registry(reg_dir));
    DatasetOptions opt;
    opt.count = 20;
    opt.seed = 3;
    opt.hr_size = 128;
    opt.with_offsets = false;
    fs::remove_all("ds_split");
    auto manifest = load_manifest(build_dataset(reg, opt, "ds_split"));
    int test = 0;
    for (const auto& r : manifest) test += r.split == "test";
    CHECK(manifest.size() == 20);
    CHECK(test == 2);
}

TEST_CASE("flip augmentation flips the measured stripe angle") {
    ToneRegistry reg;
    ScreentoneSpec s;
    s.class_id = 3;
    s.kind = ToneKind::stripe;
    s.size_px = 3;
    s.gap_px = 3;
    s.angle_deg = 30;
    reg.classes[3] = s;

    DatasetOptions opt;
    opt.count = 12;
    opt.seed = 11;
    opt.hr_size = 128;
    opt.with_offsets = false;
    opt.class_filter = {3};
    fs::remove_all("ds_flip");
    auto manifest = load_manifest(build_dataset(reg, opt, "ds_flip"));

    bool saw30 = false, saw150 = false;
    for (const auto& row : manifest) {
        Raster hr = read_png(row.hr);
        ClassMask mask = read_mask_png(row.mask_hr);
        // measure inside the largest filled region, away from line art
        int x0 = mask.width, y0 = mask.height, x1 = -1, y1 = -1, count = 0;
        for (int y = 0; y < mask.height; ++y)
            for (int x = 0; x < mask.width; ++x)
                if (mask.at(x, y) == 3) {
                    x0 = std::min(x0, x);
                    y0 = std::min(y0, y);
                    x1 = std::max(x1, x);
                    y1 = std::max(y1, y);
                    ++count;
                }
        if (count < 48 * 48) continue;
        const int inset = 6;
        if (x1 - x0 < 2 * inset + 40 || y1 - y0 < 2 * inset + 40) continue;
        Raster crop = crop_reflect(hr, x0 + inset, y0 + inset, x1 - x0 - 2 * inset,
                                   y1 - y0 - 2 * inset);
        auto rep = analysis::measure_stripes(crop);
        if (rep.confidence < 0.3) continue;
        const bool flipped = row.hflip != row.vflip;
        const double expect = flipped ? 150.0 : 30.0;
        double d = std::fmod(std::abs(rep.angle_deg - expect), 180.0);
        d = std::min(d, 180.0 - d);
        CHECK(d <= 4.0);
        (flipped ? saw150 : saw30) = true;
    }
    CHECK(saw30);
    CHECK(saw150);
}

TEST_CASE("offset files survive the flip transform") {
    ToneRegistry reg;
    ScreentoneSpec s;
    s.class_id = 1;
    s.kind = ToneKind::dot;
    s.size_px = 3;
    s.gap_px = 3;
    s.angle_deg = 20;
    reg.classes[1] = s;
    DatasetOptions opt;
    opt.count = 4;
    opt.seed = 5;
    opt.hr_size = 128;
    fs::remove_all("ds_off");
    auto manifest = load_manifest(build_dataset(reg, opt, "ds_off"));
    for (const auto& row : manifest) {
        auto sample = load_sample(row, true);
        // valid exactly on labeled pixels
        for (size_t i = 0; i < sample.mask_hr.size(); ++i)
            CHECK((sample.offsets_hr.valid[i] != 0) == (sample.mask_hr.labels[i] != 0));
        // displacement bound
        const double bound = 6.0 / std::sqrt(2.0) + 0.5;
        for (size_t i = 0; i < sample.offsets_hr.size(); ++i)
            if (sample.offsets_hr.valid[i])
                CHECK(std::hypot(static_cast<double>(sample.offsets_hr.dx[i]),
                                 sample.offsets_hr.dy[i]) <= bound);
    }
}

TEST_CASE("stof round trip") {
    OffsetField f(7, 5);
    Rng rng(1);
    for (size_t i = 0; i < f.size(); ++i) {
        f.dx[i] = rng.uniform_f(-4, 4);
        f.dy[i] = rng.uniform_f(-4, 4);
        f.valid[i] = rng.chance(0.5);
    }
    write_stof("roundtrip.stof", f);
    OffsetField g = read_stof("roundtrip.stof");
    CHECK(g.width == 7);
    CHECK(g.height == 5);
    CHECK(g.dx == f.dx);
    CHECK(g.dy == f.dy);
    CHECK(g.valid == f.valid);
    fs::remove("roundtrip.stof");
}

TEST_CASE("png mask round trip keeps class ids") {
    ClassMask m(9, 4, 0);
    for (size_t i = 0; i < m.size(); ++i) m.labels[i] = static_cast<uint8_t>(i % 9);
    write_mask_png("mask_roundtrip.png", m);
    ClassMask n = read_mask_png("mask_roundtrip.png");
    CHECK(n.labels == m.labels);
    fs::remove("mask_roundtrip.png");
}
