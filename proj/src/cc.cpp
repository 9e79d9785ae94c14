#include "tonesr/cc.hpp"

#include <stdexcept>

namespace tonesr {

ComponentMap label_components(const std::vector<uint8_t>& fg, int width, int height,
                              int connectivity) {
    if (connectivity != 4 && connectivity != 8)
        throw std::invalid_argument("label_components: connectivity must be 4 or 8");
    if (fg.size() != static_cast<size_t>(width) * height)
        throw std::invalid_argument("label_components: buffer size mismatch");

    ComponentMap cm;
    cm.width = width;
    cm.height = height;
    cm.label.assign(fg.size(), 0);

    static const int dx8[] = {1, -1, 0, 0, 1, 1, -1, -1};
    static const int dy8[] = {0, 0, 1, -1, 1, -1, 1, -1};
    const int ndirs = connectivity;

    std::vector<int32_t> stack;
    int next = 0;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const size_t i = static_cast<size_t>(y) * width + x;
            if (!fg[i] || cm.label[i]) continue;
            ++next;
            Component comp;
            comp.id = next;
            comp.x0 = comp.x1 = x;
            comp.y0 = comp.y1 = y;
            cm.label[i] = next;
            stack.push_back(static_cast<int32_t>(i));
            while (!stack.empty()) {
                const int32_t p = stack.back();
                stack.pop_back();
                const int px = p % width, py = p / width;
                ++comp.pixel_count;
                comp.x0 = std::min(comp.x0, px);
                comp.x1 = std::max(comp.x1, px);
                comp.y0 = std::min(comp.y0, py);
                comp.y1 = std::max(comp.y1, py);
                for (int d = 0; d < ndirs; ++d) {
                    const int nx = px + dx8[d], ny = py + dy8[d];
                    if (nx < 0 || ny < 0 || nx >= width || ny >= height) continue;
                    const size_t ni = static_cast<size_t>(ny) * width + nx;
                    if (fg[ni] && !cm.label[ni]) {
                        cm.label[ni] = next;
                        stack.push_back(static_cast<int32_t>(ni));
                    }
                }
            }
            cm.components.push_back(comp);
        }
    }
    return cm;
}

}  // namespace tonesr
