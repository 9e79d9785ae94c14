#pragma once

#include <cstdint>
#include <vector>

namespace tonesr {

struct Component {
    int id = 0;          // 1-based label in the component map
    int pixel_count = 0;
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // inclusive bbox
};

struct ComponentMap {
    int width = 0, height = 0;
    std::vector<int32_t> label;  // 0 = background
    std::vector<Component> components;
};

// Connected-component labeling over foreground (nonzero) pixels.
// connectivity must be 4 or 8.
ComponentMap label_components(const std::vector<uint8_t>& fg, int width, int height,
                              int connectivity);

}  // namespace tonesr
