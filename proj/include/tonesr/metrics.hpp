#pragma once

#include <vector>

#include "tonesr/raster.hpp"

namespace tonesr::metrics {

// 2|A∩B| / (|A|+|B|) on binary masks; 1.0 when both are empty.
double dice_coefficient(const std::vector<uint8_t>& pred, const std::vector<uint8_t>& truth);

// Mean per-channel Dice between two label masks over channel ids [0, channels).
double mean_dice(const ClassMask& pred, const ClassMask& truth, int channels);

// Soft variant on per-channel probabilities (row-major planes, channels x w*h).
// Also writes d(meanDice)/d(prob) when grad != nullptr.
double mean_dice_soft(const std::vector<double>& probs, const std::vector<double>& truth_onehot,
                      int channels, size_t plane, std::vector<double>* grad = nullptr);

// Mean over classes of |∩|/|∪|; classes with empty union are excluded.
double iou(const ClassMask& pred, const ClassMask& truth);

// 20*log10(255/sqrt(MSE)); 99 dB for identical images.
double psnr(const Raster& a, const Raster& b);

// Mean local SSIM, 11x11 Gaussian window sigma 1.5, k1=.01 k2=.03, L=255.
double ssim(const Raster& a, const Raster& b);

// Mean absolute difference with intensities normalized to [0,1].
// grad (optional) receives d/d(a) per pixel.
double pixel_loss(const Raster& a, const Raster& b);
double pixel_loss(const std::vector<double>& a, const std::vector<double>& b,
                  std::vector<double>* grad = nullptr);

}  // namespace tonesr::metrics
