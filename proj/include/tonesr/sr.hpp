#pragma once

#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "tonesr/dataset.hpp"
#include "tonesr/nn/disc.hpp"
#include "tonesr/nn/rrdb.hpp"
#include "tonesr/nn/unet.hpp"
#include "tonesr/raster.hpp"

namespace tonesr::sr {

struct LossWeights {
    float pix = 0.01f;
    float fea = 1.0f;
    float adv = 0.005f;
    float str = 0.1f;
    void validate() const;  // at least one weight > 0, none negative
};

// ---- structural offset network ----

class StructModel {
public:
    StructModel(std::vector<int> classes, int depth, int base, int window, uint64_t seed);

    // Per-pixel offset estimate; inputs larger than the window are tiled
    // with averaging in the overlaps. Valid everywhere (caller masks).
    OffsetField forward_field(const Raster& img) const;

    nn::UNet& net() { return *net_; }
    const nn::UNet& net() const { return *net_; }
    const std::vector<int>& classes() const { return classes_; }
    int window() const { return window_; }

    void save(const std::string& dir, const nlohmann::ordered_json& meta_extra) const;
    static std::unique_ptr<StructModel> load(const std::string& dir);

private:
    std::vector<int> classes_;
    int depth_, base_, window_;
    uint64_t seed_;
    std::unique_ptr<nn::UNet> net_;
};

struct StructTrainConfig {
    int iters = 2500;
    int batch = 4;
    int crop = 96;
    int window = 256;
    float lr = 1e-3f;
    uint64_t seed = 2;
    double min_valid_frac = 0.2;  // resample crops with fewer valid pixels
    int log_every = 50;
};

// Masked-L1 regression from HR screentone crops to their analytic offsets.
std::unique_ptr<StructModel> train_struct(const std::vector<ManifestRow>& manifest,
                                          const std::vector<int>& classes,
                                          const StructTrainConfig& cfg);

// mean |S(img) - gt| over valid pixels (the structural loss evaluated on a
// raster); returns 0 with empty=true when no pixel is valid.
struct StructLossResult {
    double value = 0;
    bool empty = false;
};
StructLossResult structural_loss(const StructModel& model, const Raster& img,
                                 const OffsetField& gt);

// ---- per-class super-resolution ----

class SRModel {
public:
    SRModel(int class_id, int scale, int nf, int gc, int nb, uint64_t seed);

    // Windowed generation with cross-fade blending; patch dims must be >= 32.
    Raster upscale(const Raster& lr_patch) const;

    nn::RRDBNet& gen() { return *gen_; }
    int class_id() const { return class_id_; }
    int scale() const { return scale_; }

    void save(const std::string& dir, const nlohmann::ordered_json& meta_extra) const;
    static std::unique_ptr<SRModel> load(const std::string& dir);

private:
    int class_id_, scale_, nf_, gc_, nb_;
    uint64_t seed_;
    std::unique_ptr<nn::RRDBNet> gen_;
};

struct SRTrainConfig {
    int iters = 1200;
    int warmup_iters = 200;  // pixel-only pretraining phase
    int batch = 2;
    int lr_crop = 64;
    float lr_g = 1e-4f;
    float lr_d = 1e-4f;
    float warmup_lr = 2e-4f;
    LossWeights weights;
    uint64_t seed = 3;
    int nf = 32, gc = 16, nb = 8;
    int disc_base = 32;
    double min_class_frac = 0.25;       // class coverage required in a crop
    std::string struct_target = "analytic";  // or "sy" (S of ground truth)
    int log_every = 1;
};

// Adversarial training with pixel, feature, adversarial, and structural
// terms. struct_model may be null only when weights.fea and weights.str are
// both zero (the perceptual extractor is the structural encoder).
std::unique_ptr<SRModel> train_sr(int class_id, const std::vector<ManifestRow>& manifest,
                                  const SRTrainConfig& cfg, const StructModel* struct_model,
                                  int scale);

struct EvalStats {
    double psnr = 0, ssim = 0;
    int count = 0;
};

// Mean full-page PSNR/SSIM of model outputs against HR ground truth over the
// manifest rows of one split that contain the model's class.
EvalStats evaluate_sr(const SRModel& model, const std::vector<ManifestRow>& manifest,
                      const std::string& split, int cap = 0);

}  // namespace tonesr::sr

