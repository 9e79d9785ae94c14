#pragma once

#include <string>

#include "tonesr/nn/layers.hpp"

namespace tonesr::nn {

// Weights container: magic "TSRW", u32le version, u32le tensor count, then per
// tensor: u16le name length, name bytes, u8 ndims, u32le dims, f32le data.
void save_weights(const std::string& path, const ParamStore& store);
// Loads by name; every parameter in the store must be present with matching
// element counts.
void load_weights(const std::string& path, ParamStore& store);

}  // namespace tonesr::nn
