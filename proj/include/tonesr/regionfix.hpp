#pragma once

#include <vector>

#include "tonesr/cc.hpp"
#include "tonesr/raster.hpp"

namespace tonesr::regionfix {

struct Region {
    int component_id = 0;  // 1-based label in the component map
    int class_id = 0;      // 0 until relabel_majority assigns one
    int pixel_count = 0;
    int x = 0, y = 0, w = 0, h = 0;  // tight bbox
};

struct ComponentSplit {
    ComponentMap map;  // labels over screentone-vs-rest binarization
    std::vector<Region> regions;
};

// Binarize to screentone-vs-rest (label >= 1), 4-connected labeling.
ComponentSplit extract_components(const ClassMask& mask);

// Give every component its modal nonzero label; ties break to the smallest
// class id. Fills regions[i].class_id.
ClassMask relabel_majority(const ClassMask& mask, ComponentSplit& comps);

// Same-label components smaller than min_area are relabeled to the modal
// label of their boundary-adjacent pixels (class 0 when the boundary carries
// no screentone, or always when drop_to_background is set).
ClassMask suppress_small(const ClassMask& mask, int min_area, bool drop_to_background = false);

// relabel_majority followed by suppress_small; the pipeline's mask fix.
ClassMask correct_mask(const ClassMask& mask, int min_area, bool drop_to_background = false);

}  // namespace tonesr::regionfix
