#pragma once

#include <string>

#include "tonesr/screentone.hpp"

namespace tonesr {

// Writes the stock 8-class registry (2 dot, 2 stripe, 2 grid, 2 tile) plus
// its tile assets under dir; returns the registry path.
std::string write_default_registry(const std::string& dir);

}  // namespace tonesr
