#include <doctest.h>

#include <cmath>

#include "tonesr/analysis.hpp"
#include "tonesr/image_io.hpp"
#include "tonesr/metrics.hpp"
#include "tonesr/synth.hpp"
#include "test_util.hpp"

using namespace tonesr;

namespace {

ScreentoneSpec make_spec(ToneKind kind, float size, float gap, float angle, float p0 = 0.f,
                         float p1 = 0.f) {
    ScreentoneSpec s;
    s.class_id = 1;
    s.kind = kind;
    s.size_px = size;
    s.gap_px = gap;
    s.angle_deg = angle;
    s.phase[0] = p0;
    s.phase[1] = p1;
    return s;
}

double ink_fraction(const Raster& r) {
    size_t ink = 0;
    for (auto p : r.pixels) ink += p < 128;
    return static_cast<double>(ink) / r.size();
}

}  // namespace

TEST_CASE("render_tile: dot lattice pitch and angle recovered") {
    auto spec = make_spec(ToneKind::dot, 3, 3, 30);
    Raster t = synth::render_tile(spec, 64, 64);
    auto rep = analysis::measure_dots(t);
    CHECK(rep.size_px + rep.gap_px == doctest::Approx(6.0).epsilon(0.1));
    CHECK(rep.angle_deg == doctest::Approx(30.0).epsilon(0.07));
}

TEST_CASE("render_tile: stripe coverage matches width/(width+gap)") {
    // analytic target 0.50; oracle is direct pixel counting
    auto spec = make_spec(ToneKind::stripe, 4, 4, 83);
    Raster t = synth::render_tile(spec, 64, 64);
    CHECK(ink_fraction(t) == doctest::Approx(0.5).epsilon(0.04));
}

TEST_CASE("render_tile: zero gap fills the plane") {
    auto spec = make_spec(ToneKind::stripe, 4, 0, 0);
    Raster t = synth::render_tile(spec, 48, 32);
    for (auto p : t.pixels) CHECK(p == 0);
}

TEST_CASE("render_tile: coverage consistency across kinds") {
    // brute-force pixel counting against the analytic coverage formulas
    struct Case {
        ToneKind kind;
        float size, gap, angle;
    };
    for (const Case& c : {Case{ToneKind::dot, 3, 3, 15}, Case{ToneKind::dot, 5, 5, 40},
                          Case{ToneKind::stripe, 3, 3, 30}, Case{ToneKind::stripe, 4, 6, 105},
                          Case{ToneKind::grid, 2, 4, 10}, Case{ToneKind::grid, 3, 6, 40}}) {
        auto spec = make_spec(c.kind, c.size, c.gap, c.angle, 0.123f, 0.321f);
        Raster t = synth::render_tile(spec, 128, 128);
        const double T = c.size + c.gap;
        double expect = 0;
        if (c.kind == ToneKind::dot)
            expect = M_PI * (c.size / 2.0) * (c.size / 2.0) / (T * T);
        else if (c.kind == ToneKind::stripe)
            expect = c.size / T;
        else
            expect = 1.0 - (1.0 - c.size / T) * (1.0 - c.size / T);
        CHECK(std::abs(ink_fraction(t) - expect) < 0.02);
    }
}

TEST_CASE("render_tile: determinism and phase sensitivity") {
    auto spec = make_spec(ToneKind::dot, 3, 3, 30, 0.2f, 0.7f);
    Raster a = synth::render_tile(spec, 64, 64);
    Raster b = synth::render_tile(spec, 64, 64);
    CHECK(a.pixels == b.pixels);
    spec.phase[0] = 0.5f;
    Raster c = synth::render_tile(spec, 64, 64);
    CHECK(a.pixels != c.pixels);
}

TEST_CASE("render_tile: tile kind tiles the user raster exactly at gap 0") {
    Raster tile(4, 4, 255);
    tile.at(0, 0) = 0;
    tile.at(1, 0) = 0;
    tile.at(2, 1) = 0;
    tile.at(3, 3) = 0;
    auto spec = make_spec(ToneKind::tile, 4, 0, 0);
    spec.tile_ref = "x";  // bypassed by the painter constructor below
    TonePainter painter(spec, tile);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x)
            CHECK(painter.ink(x + 0.5, y + 0.5) == (tile.at(x % 4, y % 4) == 0));
}

TEST_CASE("analytic_offsets: lattice centers and axis-aligned displacement") {
    // phase puts lattice centers on pixel centers (x = .5 + 6k)
    ScreentoneSpec s2 = make_spec(ToneKind::dot, 3, 3, 0);
    s2.phase[0] = 0.5f / 6.f;
    s2.phase[1] = 0.5f / 6.f;
    OffsetField f2 = synth::analytic_offsets(s2, 32, 32);
    // pixel (0,0): center (0.5, 0.5) is a lattice center
    CHECK(f2.dx[f2.idx(0, 0)] == doctest::Approx(0.0).epsilon(1e-4));
    CHECK(f2.dy[f2.idx(0, 0)] == doctest::Approx(0.0).epsilon(1e-4));
    // pixel (2,0): center (2.5, 0.5) = lattice center + (2,0)
    CHECK(f2.dx[f2.idx(2, 0)] == doctest::Approx(-2.0).epsilon(1e-4));
    CHECK(f2.dy[f2.idx(2, 0)] == doctest::Approx(0.0).epsilon(1e-4));
}

TEST_CASE("analytic_offsets: max displacement bound (brute force)") {
    auto spec = make_spec(ToneKind::dot, 3, 3, 30);
    OffsetField f = synth::analytic_offsets(spec, 64, 64);
    double max_norm = 0;
    for (size_t i = 0; i < f.size(); ++i)
        max_norm = std::max(max_norm, std::hypot(static_cast<double>(f.dx[i]), f.dy[i]));
    CHECK(max_norm <= 6.0 / std::sqrt(2.0) + 0.5);
}

TEST_CASE("analytic_offsets: adding the offset lands on a rendered unit center") {
    // brute-force nearest-center search over a rendered tile
    for (ToneKind kind : {ToneKind::dot, ToneKind::grid}) {
        auto spec = make_spec(kind, 3, 4, 25, 0.4f, 0.15f);
        TonePainter painter(spec);
        OffsetField f = synth::analytic_offsets(spec, 48, 48);
        for (int y = 0; y < 48; y += 5) {
            for (int x = 0; x < 48; x += 5) {
                const size_t i = f.idx(x, y);
                const double tx = x + 0.5 + f.dx[i], ty = y + 0.5 + f.dy[i];
                // a point is a unit center iff its own offset is ~0
                float ddx, ddy;
                painter.offset(tx, ty, &ddx, &ddy);
                CHECK(std::hypot(ddx, ddy) < 0.75);
            }
        }
    }
}

TEST_CASE("fill_page: empty mask leaves the line art untouched") {
    Rng rng(5);
    auto page = synth::make_lineart(96, 96, rng);
    ClassMask empty(96, 96, 0);
    auto r = synth::fill_page(page.line_art, empty, {});
    CHECK(r.page.pixels == page.line_art.pixels);
    for (auto v : r.offsets.valid) CHECK(v == 0);
}

TEST_CASE("fill_page: full-page fill equals ink-min with the rendered tile") {
    Rng rng(6);
    auto page = synth::make_lineart(96, 96, rng);
    ClassMask full(96, 96, 1);
    std::map<int, ScreentoneSpec> specs{{1, make_spec(ToneKind::dot, 3, 3, 30)}};
    auto r = synth::fill_page(page.line_art, full, specs);
    Raster tile = synth::render_tile(specs.at(1), 96, 96);
    for (size_t i = 0; i < r.page.pixels.size(); ++i)
        CHECK(r.page.pixels[i] == std::min(page.line_art.pixels[i], tile.pixels[i]));
}

TEST_CASE("fill_page: same class regions share one lattice across a divider") {
    //两 regions split by a 1-px line; pattern must equal the page-coordinate render
    Raster art(64, 64, 255);
    ClassMask mask(64, 64, 0);
    for (int y = 0; y < 64; ++y) {
        art.at(32, y) = 0;  // divider line
        for (int x = 0; x < 64; ++x)
            if (x != 32) mask.at(x, y) = 1;
    }
    std::map<int, ScreentoneSpec> specs{{1, make_spec(ToneKind::dot, 3, 3, 15)}};
    auto r = synth::fill_page(art, mask, specs);
    Raster whole = synth::render_tile(specs.at(1), 64, 64);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x)
            if (x != 32) CHECK(r.page.at(x, y) == std::min(whole.at(x, y), art.at(x, y)));
}

TEST_CASE("fill_page: missing spec for a present label is a configuration error") {
    Raster art(16, 16, 255);
    ClassMask mask(16, 16, 3);
    CHECK_THROWS_AS(synth::fill_page(art, mask, {}), ConfigError);
}

TEST_CASE("make_pair: dims contract and density equivalence across scales") {
    Rng rng(7);
    auto page = synth::make_lineart(256, 256, rng);
    ClassMask mask(256, 256, 0);
    for (int y = 40; y < 216; ++y)
        for (int x = 40; x < 216; ++x) mask.at(x, y) = 1;
    std::map<int, ScreentoneSpec> specs{{1, make_spec(ToneKind::dot, 3, 3, 30, 0.1f, 0.6f)}};
    auto s = synth::make_pair(page.line_art, mask, specs, 4);
    CHECK(s.lr.width == 64);
    CHECK(s.hr.width == 256);
    CHECK(s.mask_lr.width == 64);
    CHECK(s.offsets_hr.width == 256);

    // pitch measured on both fills (crop interiors away from lines)
    Raster lr_crop = crop_reflect(s.lr, 12, 12, 40, 40);
    Raster hr_crop = crop_reflect(s.hr, 48, 48, 160, 160);
    auto rep_lr = analysis::measure_dots(lr_crop);
    auto rep_hr = analysis::measure_dots(hr_crop);
    const double pitch_lr = rep_lr.size_px + rep_lr.gap_px;
    const double pitch_hr = rep_hr.size_px + rep_hr.gap_px;
    CHECK(std::abs(pitch_lr - 6.0) < 0.5);
    CHECK(std::abs(pitch_hr - 6.0) < 0.5);
    CHECK(std::abs(pitch_lr - pitch_hr) < 0.5);

    // equal coverage => equal tone
    double mean_lr = 0, mean_hr = 0;
    size_t n_lr = 0, n_hr = 0;
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x)
            if (s.mask_lr.at(x, y)) {
                mean_lr += s.lr.at(x, y);
                ++n_lr;
            }
    for (int y = 0; y < 256; ++y)
        for (int x = 0; x < 256; ++x)
            if (s.mask_hr.at(x, y)) {
                mean_hr += s.hr.at(x, y);
                ++n_hr;
            }
    CHECK(std::abs(mean_lr / n_lr - mean_hr / n_hr) <= 3.0);
}

TEST_CASE("make_pair: non-divisible dims rejected") {
    Raster art(30, 30, 255);
    ClassMask mask(30, 30, 0);
    CHECK_THROWS_AS(synth::make_pair(art, mask, {}, 4), std::invalid_argument);
}
