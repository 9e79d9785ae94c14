#pragma once

#include <string>

#include "tonesr/raster.hpp"

namespace tonesr {

// Single-channel 8-bit PNG. Color inputs are rejected; bit depths < 8 are
// expanded. Mask files store the class id directly in the pixel value.
Raster read_png(const std::string& path);
void write_png(const std::string& path, const Raster& img);

ClassMask read_mask_png(const std::string& path);
void write_mask_png(const std::string& path, const ClassMask& mask);

// Offset-field container:
//   magic "STOF", u32le width, u32le height, u8 reserved(0),
//   then width*height row-major records of (f32le dx, f32le dy, u8 valid).
OffsetField read_stof(const std::string& path);
void write_stof(const std::string& path, const OffsetField& field);

}  // namespace tonesr
