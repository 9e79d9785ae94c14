#include "tonesr/regionfix.hpp"

#include <array>
#include <stdexcept>

namespace tonesr::regionfix {

ComponentSplit extract_components(const ClassMask& mask) {
    std::vector<uint8_t> fg(mask.size());
    for (size_t i = 0; i < mask.size(); ++i) fg[i] = mask.labels[i] >= 1;
    ComponentSplit out;
    out.map = label_components(fg, mask.width, mask.height, 4);
    out.regions.reserve(out.map.components.size());
    for (const auto& c : out.map.components) {
        Region r;
        r.component_id = c.id;
        r.pixel_count = c.pixel_count;
        r.x = c.x0;
        r.y = c.y0;
        r.w = c.x1 - c.x0 + 1;
        r.h = c.y1 - c.y0 + 1;
        out.regions.push_back(r);
    }
    return out;
}

ClassMask relabel_majority(const ClassMask& mask, ComponentSplit& comps) {
    if (comps.map.width != mask.width || comps.map.height != mask.height)
        throw std::invalid_argument("relabel_majority: components not from this mask");
    const size_t ncomp = comps.regions.size();
    // per-component label histograms
    std::vector<std::array<int, 256>> hist(ncomp);
    for (auto& h : hist) h.fill(0);
    for (size_t i = 0; i < mask.size(); ++i) {
        const int32_t comp = comps.map.label[i];
        if (comp > 0 && mask.labels[i] > 0) hist[comp - 1][mask.labels[i]]++;
    }
    std::vector<uint8_t> modal(ncomp, 0);
    for (size_t c = 0; c < ncomp; ++c) {
        int best = 0, best_count = -1;
        for (int l = 1; l < 256; ++l) {
            if (hist[c][l] > best_count) {  // strict > keeps the smallest id on ties
                best_count = hist[c][l];
                best = l;
            }
        }
        modal[c] = static_cast<uint8_t>(best);
        comps.regions[c].class_id = best;
    }
    ClassMask out = mask;
    for (size_t i = 0; i < mask.size(); ++i) {
        const int32_t comp = comps.map.label[i];
        if (comp > 0) out.labels[i] = modal[comp - 1];
    }
    return out;
}

ClassMask suppress_small(const ClassMask& mask, int min_area, bool drop_to_background) {
    if (min_area < 1) throw std::invalid_argument("suppress_small: min_area must be >= 1");
    // components of equal nonzero label
    std::vector<int32_t> comp(mask.size(), 0);
    std::vector<int> area;
    std::vector<int32_t> stack;
    int next = 0;
    const int w = mask.width, h = mask.height;
    for (size_t start = 0; start < mask.size(); ++start) {
        if (!mask.labels[start] || comp[start]) continue;
        const uint8_t label = mask.labels[start];
        ++next;
        comp[start] = next;
        stack.push_back(static_cast<int32_t>(start));
        int count = 0;
        while (!stack.empty()) {
            const int32_t p = stack.back();
            stack.pop_back();
            ++count;
            const int px = p % w, py = p / w;
            const int nx[] = {px + 1, px - 1, px, px};
            const int ny[] = {py, py, py + 1, py - 1};
            for (int d = 0; d < 4; ++d) {
                if (nx[d] < 0 || ny[d] < 0 || nx[d] >= w || ny[d] >= h) continue;
                const size_t ni = static_cast<size_t>(ny[d]) * w + nx[d];
                if (mask.labels[ni] == label && !comp[ni]) {
                    comp[ni] = next;
                    stack.push_back(static_cast<int32_t>(ni));
                }
            }
        }
        area.push_back(count);
    }

    // boundary label histogram for each small component, from the input mask
    std::vector<std::array<int, 256>> boundary(next);
    for (auto& b : boundary) b.fill(0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const size_t i = static_cast<size_t>(y) * w + x;
            const int32_t c = comp[i];
            if (!c || area[c - 1] >= min_area) continue;
            const int nx[] = {x + 1, x - 1, x, x};
            const int ny[] = {y, y, y + 1, y - 1};
            for (int d = 0; d < 4; ++d) {
                if (nx[d] < 0 || ny[d] < 0 || nx[d] >= w || ny[d] >= h) continue;
                const size_t ni = static_cast<size_t>(ny[d]) * w + nx[d];
                if (comp[ni] != c) boundary[c - 1][mask.labels[ni]]++;
            }
        }
    }
    std::vector<uint8_t> repl(next, 0);
    for (int c = 0; c < next; ++c) {
        if (area[c] >= min_area) continue;
        uint8_t best = 0;
        if (!drop_to_background) {
            int best_count = 0;
            for (int l = 1; l < 256; ++l)
                if (boundary[c][l] > best_count) {
                    best_count = boundary[c][l];
                    best = static_cast<uint8_t>(l);
                }
        }
        repl[c] = best;  // stays 0 when the boundary carries no screentone
    }
    ClassMask out = mask;
    for (size_t i = 0; i < mask.size(); ++i) {
        const int32_t c = comp[i];
        if (c && area[c - 1] < min_area) out.labels[i] = repl[c - 1];
    }
    return out;
}

ClassMask correct_mask(const ClassMask& mask, int min_area, bool drop_to_background) {
    ComponentSplit comps = extract_components(mask);
    ClassMask relabeled = relabel_majority(mask, comps);
    return suppress_small(relabeled, min_area, drop_to_background);
}

}  // namespace tonesr::regionfix
