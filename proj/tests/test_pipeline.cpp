#include <doctest.h>

#include <filesystem>

#include "tonesr/pipeline.hpp"
#include "tonesr/synth.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace tonesr;

namespace {

ClassMask two_region_mask(int w, int h) {
    ClassMask m(w, h, 0);
    for (int y = 10; y < h / 2 - 2; ++y)
        for (int x = 10; x < w - 10; ++x) m.at(x, y) = 1;
    for (int y = h / 2 + 2; y < h - 10; ++y)
        for (int x = 10; x < w - 10; ++x) m.at(x, y) = 3;
    return m;
}

}  // namespace

TEST_CASE("crop_regions: bbox arithmetic, stride rounding, reflection") {
    Raster page(128, 128, 200);
    ClassMask mask(128, 128, 0);
    for (int y = 10; y < 60; ++y)
        for (int x = 10; x < 60; ++x) mask.at(x, y) = 2;
    auto crops = pipeline::crop_regions(page, mask, 16);
    REQUIRE(crops.size() == 1);
    // bbox (10,10,50,50) expanded by 16 -> (-6,-6,82,82), then rounded up
    CHECK(crops[0].x0 == -6);
    CHECK(crops[0].y0 == -6);
    CHECK(crops[0].w >= 82);
    CHECK(crops[0].w % 16 == 0);
    CHECK(crops[0].region.class_id == 2);
    CHECK(crops[0].lr_crop.width == crops[0].w);

    ClassMask empty(128, 128, 0);
    CHECK(pipeline::crop_regions(page, empty, 16).empty());
}

TEST_CASE("crop_regions: pasting crops back reproduces region pixels") {
    Rng rng(3);
    Raster page = tonesr::testutil::rand_raster(96, 96, rng);
    ClassMask mask = two_region_mask(96, 96);
    auto crops = pipeline::crop_regions(page, mask, 8);
    REQUIRE(crops.size() == 2);
    Raster rebuilt(96, 96, 0);
    for (const auto& rc : crops) {
        for (int y = 0; y < rc.h; ++y) {
            const int py = rc.y0 + y;
            if (py < 0 || py >= 96) continue;
            for (int x = 0; x < rc.w; ++x) {
                const int px = rc.x0 + x;
                if (px < 0 || px >= 96) continue;
                if (mask.at(px, py)) rebuilt.at(px, py) = rc.lr_crop.at(x, y);
            }
        }
    }
    for (int y = 0; y < 96; ++y)
        for (int x = 0; x < 96; ++x)
            if (mask.at(x, y)) CHECK(rebuilt.at(x, y) == page.at(x, y));
}

TEST_CASE("upscale_page contracts with tiny bundles") {
    // seg bundle: untrained tiny net; sr bundle: untrained tiny generator.
    // The compositing contracts hold regardless of model quality.
    const std::string dir = "pipe_test_models";
    fs::remove_all(dir);
    {
        seg::SegModel seg_m({1, 2, 3, 4, 5, 6, 7, 8}, 2, 4, 128, 11);
        seg_m.save(dir + "/seg", {});
        sr::SRModel sr1(1, 4, 8, 4, 1, 12);
        sr1.save(dir + "/sr_class_1", {});
    }
    pipeline::BundleSet bundles = pipeline::BundleSet::load_dir(dir);
    CHECK(bundles.seg != nullptr);
    CHECK(bundles.sr.count(1) == 1);

    Rng rng(5);
    auto art = synth::make_lineart(96, 96, rng);
    ScreentoneSpec spec;
    spec.class_id = 1;
    spec.kind = ToneKind::dot;
    spec.size_px = 3;
    spec.gap_px = 3;
    spec.angle_deg = 15;
    ClassMask mask(96, 96, 0);
    for (size_t i = 0; i < mask.size(); ++i)
        if (art.regions.labels[i]) mask.labels[i] = 1;
    auto fill = synth::fill_page(art.line_art, mask, {{1, spec}});

    pipeline::UpscaleOptions opt;
    opt.scale = 4;
    opt.fallback_to_base = true;
    opt.measure_regions = false;
    auto r1 = pipeline::upscale_page(fill.page, bundles, opt);
    CHECK(r1.hr.width == 384);
    CHECK(r1.hr.height == 384);
    CHECK(r1.hr_mask.width == 384);

    // determinism across runs
    auto r2 = pipeline::upscale_page(fill.page, bundles, opt);
    CHECK(r1.hr.pixels == r2.hr.pixels);
    CHECK(r1.hr_mask.labels == r2.hr_mask.labels);

    // pixels away from every region footprint come verbatim from the base
    Raster base = bicubic_upsample(fill.page, 4);
    auto [raw_mask, prob] = bundles.seg->predict(fill.page);
    ClassMask fixed = regionfix::correct_mask(raw_mask, opt.min_area);
    ClassMask hr_mask = nn_upsample(fixed, 4);
    CHECK(r1.hr_mask.labels == hr_mask.labels);  // mask consistency
    size_t outside_checked = 0;
    for (int y = 0; y < 384; ++y) {
        for (int x = 0; x < 384; ++x) {
            bool near = false;
            for (int dy = -3; dy <= 3 && !near; ++dy)
                for (int dx = -3; dx <= 3; ++dx) {
                    const int nx = std::clamp(x + dx, 0, 383), ny = std::clamp(y + dy, 0, 383);
                    if (hr_mask.at(nx, ny)) {
                        near = true;
                        break;
                    }
                }
            if (!near) {
                CHECK(r1.hr.at(x, y) == base.at(x, y));
                ++outside_checked;
            }
        }
    }
    CHECK(outside_checked > 0);
    fs::remove_all(dir);
}

TEST_CASE("upscale_page rejects missing bundles and scale mismatches") {
    const std::string dir = "pipe_test_models2";
    fs::remove_all(dir);
    {
        seg::SegModel seg_m({1, 2}, 2, 4, 128, 13);
        seg_m.save(dir + "/seg", {});
        sr::SRModel sr1(1, 2, 8, 4, 1, 14);  // scale-2 bundle
        sr1.save(dir + "/sr_class_1", {});
    }
    pipeline::BundleSet bundles = pipeline::BundleSet::load_dir(dir);
    Raster page(64, 64, 255);
    pipeline::UpscaleOptions opt;
    opt.scale = 4;
    CHECK_THROWS_AS(pipeline::upscale_page(page, bundles, opt), ConfigError);
    fs::remove_all(dir);
}
