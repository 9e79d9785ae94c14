#include "tonesr/seg.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "tonesr/common.hpp"
#include "tonesr/image_io.hpp"
#include "tonesr/metrics.hpp"
#include "tonesr/nn/adam.hpp"
#include "tonesr/nn/kernels.hpp"
#include "tonesr/nn/losses.hpp"
#include "tonesr/nn/serialize.hpp"
#include "tonesr/runlog.hpp"

namespace fs = std::filesystem;

namespace tonesr::seg {

namespace {

int pad_to(int v, int mult) { return (v + mult - 1) / mult * mult; }

// reflect-pad a page into a [1,1,H,W] tensor scaled to [0,1]
nn::Tensor page_to_tensor(const Raster& page, int ph, int pw) {
    Raster padded = crop_reflect(page, 0, 0, pw, ph);
    nn::Tensor t(1, 1, ph, pw);
    for (int y = 0; y < ph; ++y)
        for (int x = 0; x < pw; ++x) t.at(0, 0, y, x) = padded.at(x, y) / 255.f;
    return t;
}

}  // namespace

SegModel::SegModel(std::vector<int> palette, int depth, int base, int window, uint64_t seed)
    : palette_(std::move(palette)), depth_(depth), base_(base), window_(window), seed_(seed) {
    nn::UNetConfig cfg;
    cfg.in_ch = 1;
    cfg.out_ch = static_cast<int>(palette_.size()) + 1;
    cfg.depth = depth;
    cfg.base = base;
    cfg.slope = 0.0f;  // relu
    net_ = std::make_unique<nn::UNet>(cfg, seed);
}

std::pair<ClassMask, ProbMap> SegModel::predict(const Raster& page) const {
    const int C = static_cast<int>(palette_.size()) + 1;
    ProbMap prob;
    prob.width = page.width;
    prob.height = page.height;
    prob.channels = C;
    prob.p.assign(static_cast<size_t>(C) * page.width * page.height, 0.f);
    std::vector<float> weight(static_cast<size_t>(page.width) * page.height, 0.f);

    const int mult = 1 << depth_;
    auto run_window = [&](int x0, int y0, int w, int h) {
        const int ph = pad_to(h, mult), pw = pad_to(w, mult);
        Raster sub = crop_reflect(page, x0, y0, pw, ph);
        nn::Tensor x(1, 1, ph, pw);
        for (int y = 0; y < ph; ++y)
            for (int xx = 0; xx < pw; ++xx) x.at(0, 0, y, xx) = sub.at(xx, y) / 255.f;
        nn::Tensor logits;
        const_cast<nn::UNet&>(*net_).forward(x, logits);
        nn::Tensor probs;
        probs.reshape_keep(1, C, ph, pw);
        nn::kernels::softmax_channels(logits.data(), probs.data(), 1, C,
                                      static_cast<size_t>(ph) * pw);
        for (int y = 0; y < h; ++y) {
            const int py = y0 + y;
            if (py >= page.height) break;
            for (int xx = 0; xx < w; ++xx) {
                const int px = x0 + xx;
                if (px >= page.width) break;
                const size_t pi = static_cast<size_t>(py) * page.width + px;
                for (int c = 0; c < C; ++c)
                    prob.p[static_cast<size_t>(c) * page.height * page.width + pi] +=
                        probs.at(0, c, y, xx);
                weight[pi] += 1.f;
            }
        }
    };

    if (page.width <= window_ && page.height <= window_) {
        run_window(0, 0, page.width, page.height);
    } else {
        const int stride = window_ / 2;
        for (int y0 = 0;; y0 += stride) {
            const int wy = std::min(y0, std::max(0, page.height - window_));
            for (int x0 = 0;; x0 += stride) {
                const int wx = std::min(x0, std::max(0, page.width - window_));
                run_window(wx, wy, std::min(window_, page.width), std::min(window_, page.height));
                if (wx + window_ >= page.width) break;
            }
            if (wy + window_ >= page.height) break;
        }
    }

    ClassMask mask(page.width, page.height);
    const size_t plane = static_cast<size_t>(page.width) * page.height;
    for (size_t i = 0; i < plane; ++i) {
        const float inv = 1.f / weight[i];
        int best = 0;
        float best_p = 0.f;
        for (int c = 0; c < C; ++c) {
            prob.p[static_cast<size_t>(c) * plane + i] *= inv;
            if (prob.p[static_cast<size_t>(c) * plane + i] > best_p) {
                best_p = prob.p[static_cast<size_t>(c) * plane + i];
                best = c;
            }
        }
        mask.labels[i] = best == 0 ? 0 : static_cast<uint8_t>(palette_[best - 1]);
    }
    return {std::move(mask), std::move(prob)};
}

void SegModel::save(const std::string& dir, const nlohmann::ordered_json& meta_extra) const {
    fs::create_directories(dir);
    nn::save_weights((fs::path(dir) / "weights.bin").string(), net_->store);
    nlohmann::ordered_json meta;
    meta["type"] = "seg";
    meta["palette"] = palette_;
    meta["input_channels"] = 1;
    meta["depth"] = depth_;
    meta["base_width"] = base_;
    meta["window"] = window_;
    meta["seed"] = seed_;
    if (!meta_extra.is_null())
        for (const auto& [k, v] : meta_extra.items()) meta[k] = v;
    std::ofstream out(fs::path(dir) / "meta.json");
    out << meta.dump(2) << "\n";
}

std::unique_ptr<SegModel> SegModel::load(const std::string& dir) {
    std::ifstream in(fs::path(dir) / "meta.json");
    if (!in) throw ConfigError(dir + ": not a model bundle (missing meta.json)");
    nlohmann::json meta;
    in >> meta;
    if (meta.value("type", "") != "seg") throw ConfigError(dir + ": not a seg bundle");
    auto model = std::make_unique<SegModel>(
        meta.at("palette").get<std::vector<int>>(), meta.at("depth").get<int>(),
        meta.at("base_width").get<int>(), meta.at("window").get<int>(),
        meta.value("seed", 0ull));
    nn::load_weights((fs::path(dir) / "weights.bin").string(), model->net_->store);
    return model;
}

double evaluate_iou(const SegModel& model, const std::vector<ManifestRow>& rows, int cap) {
    double acc = 0;
    int count = 0;
    for (const auto& row : rows) {
        if (cap > 0 && count >= cap) break;
        const Raster page = read_png(row.hr);
        const ClassMask truth = read_mask_png(row.mask_hr);
        auto [mask, prob] = model.predict(page);
        acc += metrics::iou(mask, truth);
        ++count;
    }
    return count ? acc / count : 0.0;
}

std::unique_ptr<SegModel> train_seg(const std::vector<ManifestRow>& manifest,
                                    const std::vector<int>& palette, const SegTrainConfig& cfg,
                                    std::vector<EpochStats>* out_stats) {
    std::vector<ManifestRow> train_rows, test_rows;
    for (const auto& r : manifest)
        (r.split == "test" ? test_rows : train_rows).push_back(r);
    if (train_rows.empty()) throw ConfigError("train_seg: no train samples in manifest");

    // label -> channel lookup
    std::vector<int> lut(256, -1);
    lut[0] = 0;
    for (size_t i = 0; i < palette.size(); ++i) lut[palette[i]] = static_cast<int>(i) + 1;

    // preload pages and masks
    struct Page {
        Raster img;
        ClassMask mask;
    };
    std::vector<Page> pages(train_rows.size());
    for (size_t i = 0; i < train_rows.size(); ++i) {
        pages[i].img = read_png(train_rows[i].hr);
        pages[i].mask = read_mask_png(train_rows[i].mask_hr);
        for (auto l : pages[i].mask.labels)
            if (lut[l] < 0)
                throw ConfigError("train_seg: class " + std::to_string(l) +
                                  " present in manifest but absent from palette");
    }

    auto model = std::make_unique<SegModel>(palette, 4, 32, cfg.window, cfg.seed);
    nn::Adam opt(cfg.lr);
    const int C = static_cast<int>(palette.size()) + 1;
    const int crop = cfg.crop;

    nn::Tensor x(cfg.batch, 1, crop, crop);
    std::vector<uint8_t> labels(static_cast<size_t>(cfg.batch) * crop * crop);

    double best_test = -1.0;
    std::vector<std::vector<float>> best_weights;
    int since_best = 0;

    const int steps = static_cast<int>(train_rows.size()) / cfg.batch;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        // deterministic shuffled order
        std::vector<int> order(train_rows.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        Rng erng = Rng::stream(cfg.seed, "seg-epoch", static_cast<uint64_t>(epoch));
        for (size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[erng.uniform_int(i)]);

        double loss_sum = 0;
        for (int step = 0; step < steps; ++step) {
            for (int b = 0; b < cfg.batch; ++b) {
                const Page& pg = pages[order[(step * cfg.batch + b) % order.size()]];
                const int x0 = static_cast<int>(erng.uniform_int(pg.img.width - crop + 1));
                const int y0 = static_cast<int>(erng.uniform_int(pg.img.height - crop + 1));
                for (int y = 0; y < crop; ++y) {
                    for (int xx = 0; xx < crop; ++xx) {
                        x.at(b, 0, y, xx) = pg.img.at(x0 + xx, y0 + y) / 255.f;
                        labels[(static_cast<size_t>(b) * crop + y) * crop + xx] =
                            static_cast<uint8_t>(lut[pg.mask.at(x0 + xx, y0 + y)]);
                    }
                }
            }
            nn::Tensor logits, glogits;
            model->net().forward(x, logits);
            const double loss = nn::dice_softmax_loss(logits, labels, &glogits);
            loss_sum += loss;
            model->net().backward(glogits, nullptr, true);
            opt.step(model->net().store);
            if (cfg.log_every > 0 && step % cfg.log_every == 0)
                runlog::event("seg_step", {{"epoch", epoch}, {"step", step}, {"loss", loss}});
        }

        const double train_iou = evaluate_iou(*model, train_rows, cfg.eval_cap);
        const double test_iou =
            test_rows.empty() ? train_iou : evaluate_iou(*model, test_rows, cfg.eval_cap);
        if (out_stats)
            out_stats->push_back({epoch, loss_sum / steps, train_iou, test_iou, opt.lr()});
        runlog::event("seg_epoch", {{"epoch", epoch},
                                    {"loss", loss_sum / steps},
                                    {"train_iou", train_iou},
                                    {"test_iou", test_iou},
                                    {"lr", opt.lr()}});

        if (test_iou > best_test) {
            best_test = test_iou;
            since_best = 0;
            best_weights.clear();
            for (auto& p : model->net().store.params()) best_weights.push_back(p.v.v);
        } else if (++since_best >= cfg.plateau_epochs) {
            opt.set_lr(opt.lr() * 0.5f);
            since_best = 0;
            runlog::event("seg_lr_halved", {{"epoch", epoch}, {"lr", opt.lr()}});
        }
    }
    if (!best_weights.empty()) {
        size_t i = 0;
        for (auto& p : model->net().store.params()) p.v.v = best_weights[i++];
    }
    return model;
}

}  // namespace tonesr::seg
