#include "tonesr/defaults.hpp"

#include <filesystem>

#include "tonesr/image_io.hpp"

namespace fs = std::filesystem;

namespace tonesr {

namespace {

Raster make_cross_tile() {
    Raster t(6, 6, 255);
    for (int i = 0; i < 6; ++i) {
        t.at(2, i) = 0;
        t.at(3, i) = 0;
        t.at(i, 2) = 0;
        t.at(i, 3) = 0;
    }
    return t;
}

Raster make_blob_tile() {
    // asymmetric L-shaped motif on a 10x10 cell
    Raster t(10, 10, 255);
    for (int y = 1; y <= 6; ++y)
        for (int x = 1; x <= 4; ++x) t.at(x, y) = 0;
    for (int y = 4; y <= 8; ++y)
        for (int x = 4; x <= 7; ++x) t.at(x, y) = 0;
    t.at(8, 2) = 0;
    t.at(8, 3) = 0;
    return t;
}

ScreentoneSpec simple(int id, ToneKind kind, float size, float gap, float angle) {
    ScreentoneSpec s;
    s.class_id = id;
    s.kind = kind;
    s.size_px = size;
    s.gap_px = gap;
    s.angle_deg = angle;
    return s;
}

}  // namespace

std::string write_default_registry(const std::string& dir) {
    fs::create_directories(fs::path(dir) / "tiles");
    write_png((fs::path(dir) / "tiles" / "cross6.png").string(), make_cross_tile());
    write_png((fs::path(dir) / "tiles" / "blob10.png").string(), make_blob_tile());

    ToneRegistry reg;
    reg.classes[1] = simple(1, ToneKind::dot, 3, 3, 15);
    reg.classes[2] = simple(2, ToneKind::dot, 5, 5, 40);
    reg.classes[3] = simple(3, ToneKind::stripe, 3, 3, 30);
    reg.classes[4] = simple(4, ToneKind::stripe, 4, 6, 105);
    reg.classes[5] = simple(5, ToneKind::grid, 2, 4, 10);
    reg.classes[6] = simple(6, ToneKind::grid, 3, 6, 40);
    ScreentoneSpec t1 = simple(7, ToneKind::tile, 6, 2, 0);
    t1.tile_ref = "tiles/cross6.png";
    ScreentoneSpec t2 = simple(8, ToneKind::tile, 10, 0, 0);
    t2.tile_ref = "tiles/blob10.png";
    reg.classes[7] = t1;
    reg.classes[8] = t2;

    const std::string path = (fs::path(dir) / "registry.json").string();
    reg.save(path);
    return path;
}

}  // namespace tonesr
