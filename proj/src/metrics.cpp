#include "tonesr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace tonesr::metrics {

namespace {

void require_same_dims(int aw, int ah, int bw, int bh, const char* what) {
    if (aw != bw || ah != bh) throw std::invalid_argument(std::string(what) + ": dim mismatch");
}

}  // namespace

double dice_coefficient(const std::vector<uint8_t>& pred, const std::vector<uint8_t>& truth) {
    if (pred.size() != truth.size())
        throw std::invalid_argument("dice_coefficient: dim mismatch");
    size_t inter = 0, a = 0, b = 0;
    for (size_t i = 0; i < pred.size(); ++i) {
        const bool pa = pred[i] != 0, pb = truth[i] != 0;
        inter += (pa && pb);
        a += pa;
        b += pb;
    }
    if (a + b == 0) return 1.0;
    return 2.0 * static_cast<double>(inter) / static_cast<double>(a + b);
}

double mean_dice(const ClassMask& pred, const ClassMask& truth, int channels) {
    require_same_dims(pred.width, pred.height, truth.width, truth.height, "mean_dice");
    if (channels <= 0) throw std::invalid_argument("mean_dice: channel count must be > 0");
    double acc = 0.0;
    std::vector<uint8_t> pa(pred.size()), pb(pred.size());
    for (int c = 0; c < channels; ++c) {
        for (size_t i = 0; i < pred.size(); ++i) {
            pa[i] = pred.labels[i] == c;
            pb[i] = truth.labels[i] == c;
        }
        acc += dice_coefficient(pa, pb);
    }
    return acc / channels;
}

double mean_dice_soft(const std::vector<double>& probs, const std::vector<double>& truth_onehot,
                      int channels, size_t plane, std::vector<double>* grad) {
    if (probs.size() != truth_onehot.size() || probs.size() != plane * channels)
        throw std::invalid_argument("mean_dice_soft: dim mismatch");
    if (channels <= 0) throw std::invalid_argument("mean_dice_soft: channel count must be > 0");
    if (grad) grad->assign(probs.size(), 0.0);
    double acc = 0.0;
    for (int c = 0; c < channels; ++c) {
        const double* p = probs.data() + static_cast<size_t>(c) * plane;
        const double* t = truth_onehot.data() + static_cast<size_t>(c) * plane;
        double num = 0.0, den = 0.0;
        for (size_t i = 0; i < plane; ++i) {
            num += p[i] * t[i];
            den += p[i] + t[i];
        }
        if (den == 0.0) {
            acc += 1.0;  // channel absent from both sides is a perfect match
            continue;
        }
        const double dice = 2.0 * num / den;
        acc += dice;
        if (grad) {
            double* g = grad->data() + static_cast<size_t>(c) * plane;
            for (size_t i = 0; i < plane; ++i)
                g[i] = (2.0 * t[i] * den - 2.0 * num) / (den * den) / channels;
        }
    }
    return acc / channels;
}

double iou(const ClassMask& pred, const ClassMask& truth) {
    require_same_dims(pred.width, pred.height, truth.width, truth.height, "iou");
    // class 0 (background/line art) is not scored
    std::set<int> classes;
    for (auto l : pred.labels)
        if (l) classes.insert(l);
    for (auto l : truth.labels)
        if (l) classes.insert(l);
    double acc = 0.0;
    int counted = 0;
    for (int c : classes) {
        size_t inter = 0, uni = 0;
        for (size_t i = 0; i < pred.size(); ++i) {
            const bool pa = pred.labels[i] == c, pb = truth.labels[i] == c;
            inter += (pa && pb);
            uni += (pa || pb);
        }
        if (uni == 0) continue;
        acc += static_cast<double>(inter) / static_cast<double>(uni);
        ++counted;
    }
    return counted ? acc / counted : 1.0;
}

double psnr(const Raster& a, const Raster& b) {
    require_same_dims(a.width, a.height, b.width, b.height, "psnr");
    double mse = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a.pixels[i]) - b.pixels[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.size());
    if (mse <= 0.0) return 99.0;
    return std::min(99.0, 20.0 * std::log10(255.0 / std::sqrt(mse)));
}

double ssim(const Raster& a, const Raster& b) {
    require_same_dims(a.width, a.height, b.width, b.height, "ssim");
    constexpr int R = 5;  // 11x11 window
    if (a.width < 11 || a.height < 11)
        throw std::invalid_argument("ssim: images must be at least 11x11");
    double kernel[11];
    double ksum = 0.0;
    for (int i = 0; i < 11; ++i) {
        const double d = i - R;
        kernel[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
        ksum += kernel[i];
    }
    for (auto& k : kernel) k /= ksum;

    const int w = a.width, h = a.height;
    // separable horizontal pass over the five running images
    std::vector<double> ax(static_cast<size_t>(w) * h), bx(ax.size()), axx(ax.size()),
        bxx(ax.size()), abx(ax.size());
    for (int y = 0; y < h; ++y) {
        for (int x = R; x < w - R; ++x) {
            double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
            for (int k = -R; k <= R; ++k) {
                const double va = a.at(x + k, y), vb = b.at(x + k, y);
                const double kw = kernel[k + R];
                sa += kw * va;
                sb += kw * vb;
                saa += kw * va * va;
                sbb += kw * vb * vb;
                sab += kw * va * vb;
            }
            const size_t i = static_cast<size_t>(y) * w + x;
            ax[i] = sa;
            bx[i] = sb;
            axx[i] = saa;
            bxx[i] = sbb;
            abx[i] = sab;
        }
    }
    const double c1 = (0.01 * 255) * (0.01 * 255);
    const double c2 = (0.03 * 255) * (0.03 * 255);
    double total = 0.0;
    size_t count = 0;
    for (int y = R; y < h - R; ++y) {
        for (int x = R; x < w - R; ++x) {
            double mu_a = 0, mu_b = 0, raw_aa = 0, raw_bb = 0, raw_ab = 0;
            for (int k = -R; k <= R; ++k) {
                const size_t i = static_cast<size_t>(y + k) * w + x;
                const double kw = kernel[k + R];
                mu_a += kw * ax[i];
                mu_b += kw * bx[i];
                raw_aa += kw * axx[i];
                raw_bb += kw * bxx[i];
                raw_ab += kw * abx[i];
            }
            const double va = raw_aa - mu_a * mu_a;
            const double vb = raw_bb - mu_b * mu_b;
            const double cov = raw_ab - mu_a * mu_b;
            const double val = ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) /
                               ((mu_a * mu_a + mu_b * mu_b + c1) * (va + vb + c2));
            total += val;
            ++count;
        }
    }
    return total / static_cast<double>(count);
}

double pixel_loss(const Raster& a, const Raster& b) {
    require_same_dims(a.width, a.height, b.width, b.height, "pixel_loss");
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i)
        acc += std::abs(static_cast<double>(a.pixels[i]) - b.pixels[i]) / 255.0;
    return acc / static_cast<double>(a.size());
}

double pixel_loss(const std::vector<double>& a, const std::vector<double>& b,
                  std::vector<double>* grad) {
    if (a.size() != b.size()) throw std::invalid_argument("pixel_loss: dim mismatch");
    if (grad) grad->assign(a.size(), 0.0);
    double acc = 0.0;
    const double n = static_cast<double>(a.size());
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += std::abs(d);
        if (grad) (*grad)[i] = (d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0)) / n;
    }
    return acc / n;
}

}  // namespace tonesr::metrics
