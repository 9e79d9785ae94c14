#include "tonesr/sr.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "tonesr/common.hpp"
#include "tonesr/metrics.hpp"
#include "tonesr/image_io.hpp"
#include "tonesr/nn/adam.hpp"
#include "tonesr/nn/kernels.hpp"
#include "tonesr/nn/losses.hpp"
#include "tonesr/nn/serialize.hpp"
#include "tonesr/runlog.hpp"

namespace fs = std::filesystem;

namespace tonesr::sr {

void LossWeights::validate() const {
    if (pix < 0 || fea < 0 || adv < 0 || str < 0)
        throw ConfigError("loss weights must be non-negative");
    if (pix == 0 && fea == 0 && adv == 0 && str == 0)
        throw ConfigError("at least one loss weight must be positive");
}

namespace {

int pad_to(int v, int mult) { return (v + mult - 1) / mult * mult; }

nn::Tensor raster_to_tensor(const Raster& img) {
    nn::Tensor t(1, 1, img.height, img.width);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) t.at(0, 0, y, x) = img.at(x, y) / 255.f;
    return t;
}

uint8_t to_u8(float v) {
    return static_cast<uint8_t>(std::clamp(std::lround(v * 255.f), 0l, 255l));
}

}  // namespace

// ---- StructModel ----

StructModel::StructModel(std::vector<int> classes, int depth, int base, int window, uint64_t seed)
    : classes_(std::move(classes)), depth_(depth), base_(base), window_(window), seed_(seed) {
    nn::UNetConfig cfg;
    cfg.in_ch = 1;
    cfg.out_ch = 2;
    cfg.depth = depth;
    cfg.base = base;
    cfg.slope = 0.1f;
    net_ = std::make_unique<nn::UNet>(cfg, seed);
}

OffsetField StructModel::forward_field(const Raster& img) const {
    OffsetField out(img.width, img.height);
    std::vector<float> weight(out.size(), 0.f);
    std::vector<float> acc_dx(out.size(), 0.f), acc_dy(out.size(), 0.f);
    const int mult = 1 << depth_;

    auto run_window = [&](int x0, int y0, int w, int h) {
        const int ph = pad_to(h, mult), pw = pad_to(w, mult);
        Raster sub = crop_reflect(img, x0, y0, pw, ph);
        nn::Tensor x = raster_to_tensor(sub);
        nn::Tensor pred;
        const_cast<nn::UNet&>(*net_).forward(x, pred);
        for (int y = 0; y < h; ++y) {
            const int py = y0 + y;
            if (py >= img.height) break;
            for (int xx = 0; xx < w; ++xx) {
                const int px = x0 + xx;
                if (px >= img.width) break;
                const size_t i = out.idx(px, py);
                acc_dx[i] += pred.at(0, 0, y, xx);
                acc_dy[i] += pred.at(0, 1, y, xx);
                weight[i] += 1.f;
            }
        }
    };

    if (img.width <= window_ && img.height <= window_) {
        run_window(0, 0, img.width, img.height);
    } else {
        const int stride = window_ / 2;
        for (int y0 = 0;; y0 += stride) {
            const int wy = std::min(y0, std::max(0, img.height - window_));
            for (int x0 = 0;; x0 += stride) {
                const int wx = std::min(x0, std::max(0, img.width - window_));
                run_window(wx, wy, std::min(window_, img.width), std::min(window_, img.height));
                if (wx + window_ >= img.width) break;
            }
            if (wy + window_ >= img.height) break;
        }
    }
    for (size_t i = 0; i < out.size(); ++i) {
        out.dx[i] = acc_dx[i] / weight[i];
        out.dy[i] = acc_dy[i] / weight[i];
        out.valid[i] = 1;
    }
    return out;
}

void StructModel::save(const std::string& dir, const nlohmann::ordered_json& meta_extra) const {
    fs::create_directories(dir);
    nn::save_weights((fs::path(dir) / "weights.bin").string(), net_->store);
    nlohmann::ordered_json meta;
    meta["type"] = "struct";
    meta["classes"] = classes_;
    meta["depth"] = depth_;
    meta["base_width"] = base_;
    meta["window"] = window_;
    meta["seed"] = seed_;
    if (!meta_extra.is_null())
        for (const auto& [k, v] : meta_extra.items()) meta[k] = v;
    std::ofstream out(fs::path(dir) / "meta.json");
    out << meta.dump(2) << "\n";
}

std::unique_ptr<StructModel> StructModel::load(const std::string& dir) {
    std::ifstream in(fs::path(dir) / "meta.json");
    if (!in) throw ConfigError(dir + ": not a model bundle (missing meta.json)");
    nlohmann::json meta;
    in >> meta;
    if (meta.value("type", "") != "struct") throw ConfigError(dir + ": not a struct bundle");
    auto model = std::make_unique<StructModel>(
        meta.at("classes").get<std::vector<int>>(), meta.at("depth").get<int>(),
        meta.at("base_width").get<int>(), meta.at("window").get<int>(), meta.value("seed", 0ull));
    nn::load_weights((fs::path(dir) / "weights.bin").string(), model->net_->store);
    return model;
}

StructLossResult structural_loss(const StructModel& model, const Raster& img,
                                 const OffsetField& gt) {
    StructLossResult r;
    size_t valid = 0;
    for (auto v : gt.valid) valid += v;
    if (!valid) {
        r.empty = true;
        return r;
    }
    const OffsetField pred = model.forward_field(img);
    double acc = 0;
    for (size_t i = 0; i < gt.size(); ++i) {
        if (!gt.valid[i]) continue;
        acc += std::abs(static_cast<double>(pred.dx[i]) - gt.dx[i]);
        acc += std::abs(static_cast<double>(pred.dy[i]) - gt.dy[i]);
    }
    r.value = acc / (2.0 * static_cast<double>(valid));
    return r;
}

std::unique_ptr<StructModel> train_struct(const std::vector<ManifestRow>& manifest,
                                          const std::vector<int>& classes,
                                          const StructTrainConfig& cfg) {
    std::vector<const ManifestRow*> rows;
    for (const auto& r : manifest) {
        if (r.split != "train" || r.offsets_hr.empty()) continue;
        bool wanted = classes.empty();
        for (int c : classes) wanted = wanted || r.has_class(c);
        if (wanted) rows.push_back(&r);
    }
    if (rows.empty()) throw ConfigError("train_struct: no usable samples (offsets required)");

    auto model = std::make_unique<StructModel>(classes, 4, 16, cfg.window, cfg.seed);
    nn::Adam opt(cfg.lr);
    Rng rng = Rng::stream(cfg.seed, "struct-train");
    const int crop = cfg.crop;

    nn::Tensor x(cfg.batch, 1, crop, crop);
    nn::Tensor target(cfg.batch, 2, crop, crop);
    std::vector<uint8_t> valid(static_cast<size_t>(cfg.batch) * crop * crop);

    for (int iter = 0; iter < cfg.iters; ++iter) {
        for (int b = 0; b < cfg.batch; ++b) {
            bool filled = false;
            for (int attempt = 0; attempt < 20 && !filled; ++attempt) {
                const ManifestRow& row = *rows[rng.uniform_int(rows.size())];
                const Raster hr = read_png(row.hr);
                const OffsetField off = read_stof(row.offsets_hr);
                if (hr.width < crop || hr.height < crop) continue;
                const int x0 = static_cast<int>(rng.uniform_int(hr.width - crop + 1));
                const int y0 = static_cast<int>(rng.uniform_int(hr.height - crop + 1));
                size_t nvalid = 0;
                for (int y = 0; y < crop; ++y) {
                    for (int xx = 0; xx < crop; ++xx) {
                        const size_t oi = off.idx(x0 + xx, y0 + y);
                        const size_t vi = (static_cast<size_t>(b) * crop + y) * crop + xx;
                        x.at(b, 0, y, xx) = hr.at(x0 + xx, y0 + y) / 255.f;
                        target.at(b, 0, y, xx) = off.dx[oi];
                        target.at(b, 1, y, xx) = off.dy[oi];
                        valid[vi] = off.valid[oi];
                        nvalid += off.valid[oi];
                    }
                }
                filled = static_cast<double>(nvalid) >= cfg.min_valid_frac * crop * crop ||
                         attempt == 19;
            }
            if (!filled)
                throw ConfigError("train_struct: pages smaller than the training crop");
        }
        nn::Tensor pred, gpred;
        model->net().forward(x, pred);
        const auto loss = nn::masked_l1(pred, target, valid, &gpred);
        model->net().backward(gpred, nullptr, true);
        opt.step(model->net().store);
        if (cfg.log_every > 0 && iter % cfg.log_every == 0)
            runlog::event("struct_step", {{"iter", iter}, {"loss", loss.value}});
    }
    return model;
}

// ---- SRModel ----

SRModel::SRModel(int class_id, int scale, int nf, int gc, int nb, uint64_t seed)
    : class_id_(class_id), scale_(scale), nf_(nf), gc_(gc), nb_(nb), seed_(seed) {
    nn::RRDBConfig cfg;
    cfg.scale = scale;
    cfg.nf = nf;
    cfg.gc = gc;
    cfg.nb = nb;
    gen_ = std::make_unique<nn::RRDBNet>(cfg, seed);
}

Raster SRModel::upscale(const Raster& lr_patch) const {
    if (lr_patch.width < 32 || lr_patch.height < 32)
        throw std::invalid_argument("generate_sr: patch must be at least 32x32");
    constexpr int kWindow = 64;
    constexpr int kStride = 48;
    const int s = scale_;
    const int ow = lr_patch.width * s, oh = lr_patch.height * s;

    auto run = [&](const Raster& in, nn::Tensor& out) {
        nn::Tensor x = raster_to_tensor(in);
        const_cast<nn::RRDBNet&>(*gen_).forward(x, out);
    };

    if (lr_patch.width <= kWindow && lr_patch.height <= kWindow) {
        nn::Tensor out;
        run(lr_patch, out);
        Raster hr(ow, oh);
        for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x) hr.at(x, y) = to_u8(out.at(0, 0, y, x));
        return hr;
    }

    std::vector<double> acc(static_cast<size_t>(ow) * oh, 0.0);
    std::vector<double> wsum(acc.size(), 0.0);
    const int blend = (kWindow - kStride) * s;  // cross-fade span in HR pixels

    std::vector<int> xs, ys;
    for (int x0 = 0;; x0 += kStride) {
        xs.push_back(std::min(x0, std::max(0, lr_patch.width - kWindow)));
        if (xs.back() + kWindow >= lr_patch.width) break;
    }
    for (int y0 = 0;; y0 += kStride) {
        ys.push_back(std::min(y0, std::max(0, lr_patch.height - kWindow)));
        if (ys.back() + kWindow >= lr_patch.height) break;
    }

    for (int y0 : ys) {
        for (int x0 : xs) {
            const int w = std::min(kWindow, lr_patch.width);
            const int h = std::min(kWindow, lr_patch.height);
            Raster win = crop_reflect(lr_patch, x0, y0, w, h);
            nn::Tensor out;
            run(win, out);
            for (int y = 0; y < h * s; ++y) {
                const int py = y0 * s + y;
                double wy = 1.0;
                if (y0 > 0 && y < blend) wy = std::min(wy, (y + 1.0) / (blend + 1.0));
                if (y0 + h < lr_patch.height && y >= h * s - blend)
                    wy = std::min(wy, (h * s - y) / (blend + 1.0));
                for (int x = 0; x < w * s; ++x) {
                    const int px = x0 * s + x;
                    double wx = 1.0;
                    if (x0 > 0 && x < blend) wx = std::min(wx, (x + 1.0) / (blend + 1.0));
                    if (x0 + w < lr_patch.width && x >= w * s - blend)
                        wx = std::min(wx, (w * s - x) / (blend + 1.0));
                    const size_t i = static_cast<size_t>(py) * ow + px;
                    acc[i] += wx * wy * out.at(0, 0, y, x);
                    wsum[i] += wx * wy;
                }
            }
        }
    }
    Raster hr(ow, oh);
    for (size_t i = 0; i < acc.size(); ++i)
        hr.pixels[i] = to_u8(static_cast<float>(acc[i] / wsum[i]));
    return hr;
}

void SRModel::save(const std::string& dir, const nlohmann::ordered_json& meta_extra) const {
    fs::create_directories(dir);
    nn::save_weights((fs::path(dir) / "weights.bin").string(), gen_->store);
    nlohmann::ordered_json meta;
    meta["type"] = "sr";
    meta["class_id"] = class_id_;
    meta["scale"] = scale_;
    meta["nf"] = nf_;
    meta["gc"] = gc_;
    meta["nb"] = nb_;
    meta["seed"] = seed_;
    if (!meta_extra.is_null())
        for (const auto& [k, v] : meta_extra.items()) meta[k] = v;
    std::ofstream out(fs::path(dir) / "meta.json");
    out << meta.dump(2) << "\n";
}

std::unique_ptr<SRModel> SRModel::load(const std::string& dir) {
    std::ifstream in(fs::path(dir) / "meta.json");
    if (!in) throw ConfigError(dir + ": not a model bundle (missing meta.json)");
    nlohmann::json meta;
    in >> meta;
    if (meta.value("type", "") != "sr") throw ConfigError(dir + ": not an sr bundle");
    auto model = std::make_unique<SRModel>(meta.at("class_id").get<int>(),
                                           meta.at("scale").get<int>(), meta.at("nf").get<int>(),
                                           meta.at("gc").get<int>(), meta.at("nb").get<int>(),
                                           meta.value("seed", 0ull));
    nn::load_weights((fs::path(dir) / "weights.bin").string(), model->gen_->store);
    return model;
}

std::unique_ptr<SRModel> train_sr(int class_id, const std::vector<ManifestRow>& manifest,
                                  const SRTrainConfig& cfg, const StructModel* struct_model,
                                  int scale) {
    cfg.weights.validate();
    if ((cfg.weights.str > 0 || cfg.weights.fea > 0) && !struct_model)
        throw ConfigError(
            "train_sr: structural bundle required when lambda_str or lambda_fea > 0 "
            "(the perceptual extractor is its encoder)");

    struct Sample {
        Raster lr, hr;
        ClassMask mask_lr;
        std::string offsets_path;
    };
    std::vector<Sample> samples;
    for (const auto& r : manifest) {
        if (r.split != "train" || !r.has_class(class_id)) continue;
        Sample s;
        s.lr = read_png(r.lr);
        s.hr = read_png(r.hr);
        s.mask_lr = read_mask_png(r.mask_lr);
        s.offsets_path = r.offsets_hr;
        if (cfg.weights.str > 0 && cfg.struct_target == "analytic" && s.offsets_path.empty())
            throw ConfigError("train_sr: analytic structural targets need offset files");
        samples.push_back(std::move(s));
    }
    if (samples.empty())
        throw ConfigError("train_sr: no train samples contain class " +
                          std::to_string(class_id));

    auto model = std::make_unique<SRModel>(class_id, scale, cfg.nf, cfg.gc, cfg.nb, cfg.seed);
    nn::PatchDiscriminator disc(1, cfg.disc_base, cfg.seed + 1);
    nn::Adam opt_g(cfg.warmup_lr);
    nn::Adam opt_d(cfg.lr_d);
    Rng rng = Rng::stream(cfg.seed, "sr-train");

    const int crop = cfg.lr_crop;
    const int hcrop = crop * scale;
    nn::Tensor lr_t(cfg.batch, 1, crop, crop);
    nn::Tensor hr_t(cfg.batch, 1, hcrop, hcrop);
    nn::Tensor str_target(cfg.batch, 2, hcrop, hcrop);
    std::vector<uint8_t> str_valid(static_cast<size_t>(cfg.batch) * hcrop * hcrop);

    // frozen StructModel acts as both structural scorer and feature extractor
    nn::UNet* S = struct_model ? const_cast<nn::UNet*>(&struct_model->net()) : nullptr;

    for (int iter = 0; iter < cfg.iters; ++iter) {
        const bool warmup = iter < cfg.warmup_iters;
        // ---- assemble batch ----
        for (int b = 0; b < cfg.batch; ++b) {
            bool filled = false;
            for (int attempt = 0; attempt < 20 && !filled; ++attempt) {
                const Sample& s = samples[rng.uniform_int(samples.size())];
                if (s.lr.width < crop || s.lr.height < crop) continue;
                const int x0 = static_cast<int>(rng.uniform_int(s.lr.width - crop + 1));
                const int y0 = static_cast<int>(rng.uniform_int(s.lr.height - crop + 1));
                size_t cls = 0;
                for (int y = 0; y < crop; ++y)
                    for (int xx = 0; xx < crop; ++xx)
                        cls += s.mask_lr.at(x0 + xx, y0 + y) == class_id;
                if (attempt < 19 &&
                    static_cast<double>(cls) < cfg.min_class_frac * crop * crop)
                    continue;
                for (int y = 0; y < crop; ++y)
                    for (int xx = 0; xx < crop; ++xx)
                        lr_t.at(b, 0, y, xx) = s.lr.at(x0 + xx, y0 + y) / 255.f;
                for (int y = 0; y < hcrop; ++y)
                    for (int xx = 0; xx < hcrop; ++xx)
                        hr_t.at(b, 0, y, xx) = s.hr.at(x0 * scale + xx, y0 * scale + y) / 255.f;
                if (!warmup && cfg.weights.str > 0) {
                    OffsetField off;
                    const bool use_sy = cfg.struct_target == "sy";
                    if (!use_sy) off = read_stof(s.offsets_path);
                    for (int y = 0; y < hcrop; ++y) {
                        for (int xx = 0; xx < hcrop; ++xx) {
                            const size_t vi =
                                (static_cast<size_t>(b) * hcrop + y) * hcrop + xx;
                            if (use_sy) {
                                str_valid[vi] = 1;  // filled after S(hr) below
                            } else {
                                const size_t oi = off.idx(x0 * scale + xx, y0 * scale + y);
                                str_target.at(b, 0, y, xx) = off.dx[oi];
                                str_target.at(b, 1, y, xx) = off.dy[oi];
                                str_valid[vi] = off.valid[oi];
                            }
                        }
                    }
                }
                filled = true;
            }
            if (!filled)
                throw ConfigError(
                    "train_sr: could not assemble a crop (LR pages smaller than lr_crop?)");
        }

        // ---- generator step ----
        nn::Tensor sr, g_sr;
        model->gen().forward(lr_t, sr);
        g_sr.reshape_keep(sr.n, sr.c, sr.h, sr.w);
        g_sr.zero();

        double l_pix = 0, l_fea = 0, l_adv = 0, l_str = 0;
        {
            nn::Tensor g;
            l_pix = nn::l1_loss(sr, hr_t, &g);
            const float wpix = warmup ? 1.0f : cfg.weights.pix;
            if (wpix > 0) nn::kernels::axpy(wpix, g.data(), g_sr.data(), g_sr.numel());
        }
        if (!warmup && cfg.weights.fea > 0) {
            nn::Tensor feat_hr, feat_sr, gfeat, gx;
            S->forward_features(hr_t, feat_hr);
            nn::Tensor feat_hr_copy = feat_hr;
            S->forward_features(sr, feat_sr);
            l_fea = nn::l1_loss(feat_sr, feat_hr_copy, &gfeat);
            S->backward_features(gfeat, gx);
            nn::kernels::axpy(cfg.weights.fea, gx.data(), g_sr.data(), g_sr.numel());
        }
        if (!warmup && cfg.weights.adv > 0) {
            nn::Tensor d_real, d_fake, g_logits, gx;
            disc.forward(hr_t, d_real);
            nn::Tensor d_real_copy = d_real;
            disc.forward(sr, d_fake);  // acts now belong to the fake pass
            l_adv = nn::ragan_generator_loss(d_real_copy, d_fake, &g_logits);
            disc.backward(g_logits, &gx, /*weight_grads=*/false);
            nn::kernels::axpy(cfg.weights.adv, gx.data(), g_sr.data(), g_sr.numel());
        }
        if (!warmup && cfg.weights.str > 0) {
            if (cfg.struct_target == "sy") {
                nn::Tensor sy;
                S->forward(hr_t, sy);
                str_target = sy;
            }
            nn::Tensor pred, gpred, gx;
            S->forward(sr, pred);
            const auto ml = nn::masked_l1(pred, str_target, str_valid, &gpred);
            l_str = ml.value;
            if (ml.empty)
                runlog::event("str_loss_empty", {{"iter", iter}}, "warn");
            else {
                S->backward(gpred, &gx, /*weight_grads=*/false);
                nn::kernels::axpy(cfg.weights.str, gx.data(), g_sr.data(), g_sr.numel());
            }
        }
        model->gen().backward(g_sr, true);
        opt_g.set_lr(warmup ? cfg.warmup_lr : cfg.lr_g);
        opt_g.step(model->gen().store);

        // ---- discriminator step ----
        double l_d = 0;
        if (!warmup && cfg.weights.adv > 0) {
            nn::Tensor d_real, d_fake, g_real, g_fake;
            disc.forward(hr_t, d_real);
            nn::Tensor d_real_copy = d_real;
            disc.forward(sr, d_fake);
            l_d = nn::ragan_discriminator_loss(d_real_copy, d_fake, &g_real, &g_fake);
            // weight grads accumulate across the two passes
            disc.backward(g_fake, nullptr, true);  // acts match the fake pass
            disc.forward(hr_t, d_real);
            disc.backward(g_real, nullptr, true);
            opt_d.step(disc.store);
        }

        if (cfg.log_every > 0 && iter % cfg.log_every == 0)
            runlog::event("sr_step", {{"class", class_id},
                                      {"iter", iter},
                                      {"warmup", warmup},
                                      {"l_pix", l_pix},
                                      {"l_fea", l_fea},
                                      {"l_adv", l_adv},
                                      {"l_str", l_str},
                                      {"l_d", l_d}});
    }
    return model;
}

}  // namespace tonesr::sr

namespace tonesr::sr {

EvalStats evaluate_sr(const SRModel& model, const std::vector<ManifestRow>& manifest,
                      const std::string& split, int cap) {
    EvalStats stats;
    for (const auto& row : manifest) {
        if (row.split != split || !row.has_class(model.class_id())) continue;
        if (cap > 0 && stats.count >= cap) break;
        const Raster lr = read_png(row.lr);
        const Raster hr = read_png(row.hr);
        const Raster sr = model.upscale(lr);
        stats.psnr += metrics::psnr(sr, hr);
        stats.ssim += metrics::ssim(sr, hr);
        ++stats.count;
    }
    if (stats.count) {
        stats.psnr /= stats.count;
        stats.ssim /= stats.count;
    }
    return stats;
}

}  // namespace tonesr::sr
