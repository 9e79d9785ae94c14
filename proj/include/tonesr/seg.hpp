#pragma once

#include <memory>
#include <string>
#include <vector>

#include "tonesr/dataset.hpp"
#include "tonesr/nn/unet.hpp"
#include "tonesr/raster.hpp"

namespace tonesr::seg {

struct SegTrainConfig {
    int epochs = 25;
    int batch = 4;
    int crop = 64;          // training window
    int window = 256;       // inference window stored in the bundle
    float lr = 1e-3f;
    int plateau_epochs = 3;  // halve lr after this many epochs without test-IoU gain
    int eval_cap = 48;       // pages per split for the per-epoch IoU estimate
    uint64_t seed = 1;
    int log_every = 50;
};

struct EpochStats {
    int epoch = 0;
    double loss = 0;
    double train_iou = 0, test_iou = 0;
    float lr = 0;
};

// Per-pixel class probabilities (channel planes, row-major).
struct ProbMap {
    int width = 0, height = 0, channels = 0;
    std::vector<float> p;  // [c][y][x]
    float at(int c, int x, int y) const {
        return p[(static_cast<size_t>(c) * height + y) * width + x];
    }
};

class SegModel {
public:
    SegModel(std::vector<int> palette, int depth, int base, int window, uint64_t seed);

    // argmax mask + probabilities; pages larger than the window are tiled
    // with stride window/2 and probability averaging
    std::pair<ClassMask, ProbMap> predict(const Raster& page) const;

    const std::vector<int>& palette() const { return palette_; }
    int window() const { return window_; }
    nn::UNet& net() { return *net_; }
    const nn::UNet& net() const { return *net_; }

    void save(const std::string& dir, const nlohmann::ordered_json& meta_extra) const;
    static std::unique_ptr<SegModel> load(const std::string& dir);

private:
    std::vector<int> palette_;  // class ids, channel i+1 -> palette[i]
    int depth_, base_, window_;
    uint64_t seed_;
    std::unique_ptr<nn::UNet> net_;
};

// Dice-loss training over the manifest's train split (hr pages + hr masks).
// Keeps the best test-IoU epoch. Returns the trained model and per-epoch
// stats via out_stats.
std::unique_ptr<SegModel> train_seg(const std::vector<ManifestRow>& manifest,
                                    const std::vector<int>& palette, const SegTrainConfig& cfg,
                                    std::vector<EpochStats>* out_stats = nullptr);

// Macro-IoU of the model over a set of rows (hr pages).
double evaluate_iou(const SegModel& model, const std::vector<ManifestRow>& rows, int cap = 0);

}  // namespace tonesr::seg
