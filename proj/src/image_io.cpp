#include "tonesr/image_io.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <memory>
#include <stdexcept>
#include <vector>

namespace tonesr {

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

[[noreturn]] void fail(const std::string& path, const char* what) {
    throw std::runtime_error(path + ": " + what);
}

std::vector<uint8_t> read_gray8(const std::string& path, uint32_t* w, uint32_t* h) {
    FilePtr fp(fopen(path.c_str(), "rb"));
    if (!fp) fail(path, "cannot open");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) fail(path, "png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(path, "libpng error while reading");
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    const png_byte color = png_get_color_type(png, info);
    const png_byte depth = png_get_bit_depth(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (depth == 16) png_set_strip_16(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA ||
        color == PNG_COLOR_TYPE_PALETTE)
        png_set_rgb_to_gray_fixed(png, 1, -1, -1);
    png_read_update_info(png, info);

    *w = png_get_image_width(png, info);
    *h = png_get_image_height(png, info);
    if (png_get_channels(png, info) != 1) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(path, "expected a single-channel image after conversion");
    }
    std::vector<uint8_t> pixels(static_cast<size_t>(*w) * *h);
    std::vector<png_bytep> rows(*h);
    for (uint32_t y = 0; y < *h; ++y) rows[y] = pixels.data() + static_cast<size_t>(y) * *w;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return pixels;
}

void write_gray8(const std::string& path, const uint8_t* data, uint32_t w, uint32_t h) {
    FilePtr fp(fopen(path.c_str(), "wb"));
    if (!fp) fail(path, "cannot open for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) fail(path, "png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail(path, "libpng error while writing");
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(h);
    for (uint32_t y = 0; y < h; ++y)
        rows[y] = const_cast<png_bytep>(data + static_cast<size_t>(y) * w);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace

Raster read_png(const std::string& path) {
    uint32_t w = 0, h = 0;
    auto pixels = read_gray8(path, &w, &h);
    Raster img(static_cast<int>(w), static_cast<int>(h));
    img.pixels = std::move(pixels);
    return img;
}

void write_png(const std::string& path, const Raster& img) {
    write_gray8(path, img.pixels.data(), img.width, img.height);
}

ClassMask read_mask_png(const std::string& path) {
    uint32_t w = 0, h = 0;
    auto pixels = read_gray8(path, &w, &h);
    ClassMask mask(static_cast<int>(w), static_cast<int>(h));
    mask.labels = std::move(pixels);
    return mask;
}

void write_mask_png(const std::string& path, const ClassMask& mask) {
    write_gray8(path, mask.labels.data(), mask.width, mask.height);
}

OffsetField read_stof(const std::string& path) {
    FilePtr fp(fopen(path.c_str(), "rb"));
    if (!fp) fail(path, "cannot open");
    char magic[4];
    if (fread(magic, 1, 4, fp.get()) != 4 || memcmp(magic, "STOF", 4) != 0)
        fail(path, "bad STOF magic");
    uint32_t w = 0, h = 0;
    uint8_t reserved = 0;
    if (fread(&w, 4, 1, fp.get()) != 1 || fread(&h, 4, 1, fp.get()) != 1 ||
        fread(&reserved, 1, 1, fp.get()) != 1)
        fail(path, "truncated STOF header");
    OffsetField f(static_cast<int>(w), static_cast<int>(h));
    const size_t n = f.size();
    std::vector<uint8_t> buf(n * 9);
    if (fread(buf.data(), 1, buf.size(), fp.get()) != buf.size())
        fail(path, "truncated STOF payload");
    for (size_t i = 0; i < n; ++i) {
        memcpy(&f.dx[i], buf.data() + i * 9, 4);
        memcpy(&f.dy[i], buf.data() + i * 9 + 4, 4);
        f.valid[i] = buf[i * 9 + 8];
    }
    return f;
}

void write_stof(const std::string& path, const OffsetField& field) {
    FilePtr fp(fopen(path.c_str(), "wb"));
    if (!fp) fail(path, "cannot open for writing");
    const uint32_t w = field.width, h = field.height;
    const uint8_t reserved = 0;
    fwrite("STOF", 1, 4, fp.get());
    fwrite(&w, 4, 1, fp.get());
    fwrite(&h, 4, 1, fp.get());
    fwrite(&reserved, 1, 1, fp.get());
    const size_t n = field.size();
    std::vector<uint8_t> buf(n * 9);
    for (size_t i = 0; i < n; ++i) {
        memcpy(buf.data() + i * 9, &field.dx[i], 4);
        memcpy(buf.data() + i * 9 + 4, &field.dy[i], 4);
        buf[i * 9 + 8] = field.valid[i];
    }
    if (fwrite(buf.data(), 1, buf.size(), fp.get()) != buf.size()) fail(path, "short write");
}

}  // namespace tonesr
