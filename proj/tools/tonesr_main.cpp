// tonesr: screentone-preserving manga upscaling toolkit.

#include <omp.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tonesr/analysis.hpp"
#include "tonesr/common.hpp"
#include "tonesr/dataset.hpp"
#include "tonesr/defaults.hpp"
#include "tonesr/image_io.hpp"
#include "tonesr/metrics.hpp"
#include "tonesr/pipeline.hpp"
#include "tonesr/regionfix.hpp"
#include "tonesr/runlog.hpp"
#include "tonesr/seg.hpp"
#include "tonesr/sr.hpp"
#include "tonesr/synth.hpp"

extern "C" void openblas_set_num_threads(int);

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;
using namespace tonesr;

namespace {

json g_config;  // from --config, seeds option defaults (flags win)

template <typename T>
T cfgv(const char* key, T def) {
    if (g_config.contains(key)) return g_config[key].get<T>();
    return def;
}

uint64_t file_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return 0;
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return fnv1a64(data);
}

void write_run_manifest(const std::string& out_dir, const std::string& subcommand,
                        const ordered_json& resolved, const std::vector<std::string>& inputs) {
    fs::create_directories(out_dir);
    ordered_json m;
    m["tool"] = kToolVersion;
    m["subcommand"] = subcommand;
    m["config"] = resolved;
    m["config_hash"] = hex64(fnv1a64(resolved.dump()));
    m["inputs"] = ordered_json::object();
    for (const auto& p : inputs) m["inputs"][p] = hex64(file_hash(p));
    std::ofstream out(fs::path(out_dir) / "run_manifest.json");
    out << m.dump(2) << "\n";
    // the resolved config is echoed separately for reuse with --config
    std::ofstream cfg(fs::path(out_dir) / "config_resolved.json");
    cfg << resolved.dump(2) << "\n";
}

void check_device() {
    const char* dev = std::getenv("TONESR_DEVICE");
    if (!dev) return;
    const std::string d(dev);
    if (d != "" && d != "auto" && d != "cpu")
        throw ConfigError("TONESR_DEVICE=" + d + " is not available in this build (cpu only)");
}

std::vector<int> parse_class_list(const std::string& s) {
    std::vector<int> out;
    std::string cur;
    for (char c : s + ",") {
        if (c == ',') {
            if (!cur.empty()) out.push_back(std::stoi(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    return out;
}

ordered_json density_to_json(const analysis::DensityReport& dr) {
    ordered_json j;
    j["kind"] = to_string(dr.kind);
    j["size_px"] = dr.size_px;
    j["gap_px"] = dr.gap_px;
    j["angle_deg"] = dr.angle_deg;
    j["unit_area_px2"] = dr.unit_area_px2;
    j["confidence"] = dr.confidence;
    j["roi"] = {dr.roi.x, dr.roi.y, dr.roi.w, dr.roi.h};
    return j;
}

// ---- subcommand runners ----

int run_gen(const std::string& registry_path, const std::string& out, DatasetOptions opt,
            const std::string& emit_registry) {
    if (!emit_registry.empty()) {
        const std::string p = write_default_registry(emit_registry);
        runlog::event("registry_written", {{"path", p}});
        if (registry_path.empty()) return 0;
    }
    if (registry_path.empty()) throw ConfigError("gen: --registry is required");
    ToneRegistry reg = ToneRegistry::load(registry_path);
    const std::string manifest = build_dataset(reg, opt, out);
    ordered_json resolved;
    resolved["registry"] = registry_path;
    resolved["count"] = opt.count;
    resolved["scale"] = opt.scale;
    resolved["hr_size"] = opt.hr_size;
    resolved["seed"] = opt.seed;
    resolved["with_offsets"] = opt.with_offsets;
    resolved["flips"] = opt.flips;
    resolved["jitter_size_rel"] = opt.jitter_size_rel;
    resolved["jitter_gap_rel"] = opt.jitter_gap_rel;
    resolved["jitter_angle_deg"] = opt.jitter_angle_deg;
    resolved["classes"] = opt.class_filter;
    resolved["lineart_dir"] = opt.lineart_dir;
    write_run_manifest(out, "gen", resolved, {registry_path});
    runlog::event("dataset_written", {{"manifest", manifest}, {"count", opt.count}});
    return 0;
}

int run_train_seg(const std::string& manifest_path, const std::string& out,
                  seg::SegTrainConfig cfg) {
    auto manifest = load_manifest(manifest_path);
    // palette = classes present in the manifest
    std::set<int> ids;
    for (const auto& r : manifest)
        for (const auto& s : r.specs) ids.insert(s.class_id);
    std::vector<int> palette(ids.begin(), ids.end());

    std::vector<seg::EpochStats> stats;
    auto model = seg::train_seg(manifest, palette, cfg, &stats);

    ordered_json history = ordered_json::array();
    for (const auto& e : stats)
        history.push_back({{"epoch", e.epoch},
                           {"loss", e.loss},
                           {"train_iou", e.train_iou},
                           {"test_iou", e.test_iou},
                           {"lr", e.lr}});
    ordered_json extra;
    extra["epochs"] = cfg.epochs;
    extra["batch"] = cfg.batch;
    extra["crop"] = cfg.crop;
    extra["dataset_hash"] = hex64(file_hash(manifest_path));
    extra["history"] = history;
    model->save(out, extra);

    ordered_json resolved;
    resolved["manifest"] = manifest_path;
    resolved["epochs"] = cfg.epochs;
    resolved["batch"] = cfg.batch;
    resolved["crop"] = cfg.crop;
    resolved["window"] = cfg.window;
    resolved["lr"] = cfg.lr;
    resolved["seed"] = cfg.seed;
    resolved["eval_cap"] = cfg.eval_cap;
    write_run_manifest(out, "train-seg", resolved, {manifest_path});
    runlog::event("seg_trained",
                  {{"out", out},
                   {"best_test_iou", stats.empty() ? 0.0 : stats.back().test_iou}});
    return 0;
}

int run_train_struct(const std::string& manifest_path, const std::string& out,
                     const std::vector<int>& classes, sr::StructTrainConfig cfg) {
    auto manifest = load_manifest(manifest_path);
    auto model = sr::train_struct(manifest, classes, cfg);
    ordered_json extra;
    extra["iters"] = cfg.iters;
    extra["crop"] = cfg.crop;
    extra["dataset_hash"] = hex64(file_hash(manifest_path));
    model->save(out, extra);
    ordered_json resolved;
    resolved["manifest"] = manifest_path;
    resolved["classes"] = classes;
    resolved["iters"] = cfg.iters;
    resolved["batch"] = cfg.batch;
    resolved["crop"] = cfg.crop;
    resolved["lr"] = cfg.lr;
    resolved["seed"] = cfg.seed;
    write_run_manifest(out, "train-struct", resolved, {manifest_path});
    runlog::event("struct_trained", {{"out", out}});
    return 0;
}

int run_train_sr(int class_id, const std::string& manifest_path, const std::string& out,
                 const std::string& struct_dir, int scale, sr::SRTrainConfig cfg) {
    auto manifest = load_manifest(manifest_path);
    std::unique_ptr<sr::StructModel> S;
    if (!struct_dir.empty()) S = sr::StructModel::load(struct_dir);
    auto model = sr::train_sr(class_id, manifest, cfg, S.get(), scale);
    ordered_json extra;
    extra["iters"] = cfg.iters;
    extra["warmup_iters"] = cfg.warmup_iters;
    extra["loss_weights"] = {{"pix", cfg.weights.pix},
                             {"fea", cfg.weights.fea},
                             {"adv", cfg.weights.adv},
                             {"str", cfg.weights.str}};
    extra["struct_target"] = cfg.struct_target;
    extra["feature_extractor"] = cfg.weights.fea > 0 ? "struct-encoder" : "none";
    extra["dataset_hash"] = hex64(file_hash(manifest_path));
    model->save(out, extra);
    ordered_json resolved;
    resolved["class"] = class_id;
    resolved["manifest"] = manifest_path;
    resolved["struct"] = struct_dir;
    resolved["scale"] = scale;
    resolved["iters"] = cfg.iters;
    resolved["warmup_iters"] = cfg.warmup_iters;
    resolved["batch"] = cfg.batch;
    resolved["lambda_pix"] = cfg.weights.pix;
    resolved["lambda_fea"] = cfg.weights.fea;
    resolved["lambda_adv"] = cfg.weights.adv;
    resolved["lambda_str"] = cfg.weights.str;
    resolved["struct_target"] = cfg.struct_target;
    resolved["seed"] = cfg.seed;
    write_run_manifest(out, "train-sr", resolved, {manifest_path});
    runlog::event("sr_trained", {{"class", class_id}, {"out", out}});
    return 0;
}

int run_segment(const std::string& model_dir, const std::string& in, const std::string& out) {
    auto model = seg::SegModel::load(model_dir);
    const Raster page = read_png(in);
    auto [mask, prob] = model->predict(page);
    write_mask_png(out, mask);
    runlog::event("segmented", {{"in", in}, {"out", out}});
    return 0;
}

int run_fix_mask(const std::string& in, const std::string& out, int min_area, bool drop) {
    const ClassMask mask = read_mask_png(in);
    write_mask_png(out, regionfix::correct_mask(mask, min_area, drop));
    runlog::event("mask_fixed", {{"in", in}, {"out", out}, {"min_area", min_area}});
    return 0;
}

int run_upscale(const std::string& in, const std::string& models, const std::string& out,
                const std::string& emit_mask, const std::string& report_path,
                const std::string& registry_path, pipeline::UpscaleOptions opt) {
    pipeline::BundleSet bundles = pipeline::BundleSet::load_dir(models);
    std::optional<ToneRegistry> reg;
    if (!registry_path.empty()) {
        reg = ToneRegistry::load(registry_path);
        opt.registry = &*reg;
    }
    const Raster page = read_png(in);
    auto result = pipeline::upscale_page(page, bundles, opt);
    write_png(out, result.hr);
    if (!emit_mask.empty()) write_mask_png(emit_mask, result.hr_mask);
    if (!report_path.empty()) {
        std::ofstream rep(report_path);
        rep << result.report.dump(2) << "\n";
    }
    runlog::event("upscaled", {{"in", in},
                               {"out", out},
                               {"scale", opt.scale},
                               {"regions", result.report["regions"].size()},
                               {"base", result.report["base"]}});
    return 0;
}

int run_measure(const std::string& in, const std::string& kind_str, const std::string& roi_str,
                const std::string& json_out) {
    const Raster img = read_png(in);
    analysis::DensityReport dr;
    if (!roi_str.empty()) {
        const auto v = parse_class_list(roi_str);
        if (v.size() != 4) throw ConfigError("measure: --roi expects x,y,w,h");
        analysis::Bbox roi{v[0], v[1], v[2], v[3]};
        dr = analysis::measure_unit_area(img, &roi);
    } else if (kind_str == "auto") {
        dr = analysis::measure_auto(img);
    } else {
        dr = analysis::measure_kind(img, tone_kind_from_string(kind_str));
    }
    const ordered_json j = density_to_json(dr);
    if (!json_out.empty()) {
        std::ofstream out(json_out);
        out << j.dump(2) << "\n";
    }
    std::cout << j.dump() << "\n";
    return 0;
}

int run_lbp(const std::string& model_path, const std::string& in, bool train,
            const std::string& registry_path, const std::string& out,
            analysis::LbpTrainOptions opt) {
    if (train) {
        if (registry_path.empty()) throw ConfigError("lbp --train: --registry required");
        ToneRegistry reg = ToneRegistry::load(registry_path);
        analysis::LbpModel model = analysis::lbp_train(reg, opt);
        model.save(out.empty() ? "lbp_model.json" : out);
        runlog::event("lbp_trained", {{"out", out}});
        return 0;
    }
    analysis::LbpModel model = analysis::LbpModel::load(model_path);
    const Raster region = read_png(in);
    auto [cls, dist] = analysis::lbp_classify(model, region);
    ordered_json j;
    j["class_id"] = cls;
    j["distance"] = dist;
    std::cout << j.dump() << "\n";
    return 0;
}

int run_eval(const std::string& pred, const std::string& truth, const std::string& pred_mask,
             const std::string& truth_mask, const std::string& json_out) {
    ordered_json j;
    if (!pred.empty()) {
        const Raster a = read_png(pred);
        const Raster b = read_png(truth);
        j["psnr_db"] = metrics::psnr(a, b);
        j["ssim"] = metrics::ssim(a, b);
        j["pixel_l1"] = metrics::pixel_loss(a, b);
    }
    if (!pred_mask.empty()) {
        const ClassMask a = read_mask_png(pred_mask);
        const ClassMask b = read_mask_png(truth_mask);
        int channels = 0;
        for (auto l : a.labels) channels = std::max(channels, static_cast<int>(l) + 1);
        for (auto l : b.labels) channels = std::max(channels, static_cast<int>(l) + 1);
        j["iou"] = metrics::iou(a, b);
        j["mean_dice"] = metrics::mean_dice(a, b, channels);
    }
    if (j.empty()) throw ConfigError("eval: provide --pred/--truth or --pred-mask/--truth-mask");
    if (!json_out.empty()) {
        std::ofstream out(json_out);
        out << j.dump(2) << "\n";
    }
    std::cout << j.dump() << "\n";
    return 0;
}

int run_ablate(int class_id, const std::string& manifest_path, const std::string& struct_dir,
               const std::string& out_dir, int scale, sr::SRTrainConfig base_cfg, int test_cap,
               float lambda_str_on) {
    auto manifest = load_manifest(manifest_path);
    auto S = sr::StructModel::load(struct_dir);
    fs::create_directories(out_dir);

    ordered_json table;
    table["class"] = class_id;
    table["rows"] = ordered_json::array();
    std::map<std::string, sr::EvalStats> results;
    for (const float lstr : {0.0f, lambda_str_on}) {
        sr::SRTrainConfig cfg = base_cfg;
        cfg.weights.str = lstr;
        auto model = sr::train_sr(class_id, manifest, cfg, S.get(), scale);
        const std::string name = lstr > 0 ? "with_str" : "baseline";
        model->save((fs::path(out_dir) / name).string(),
                    {{"lambda_str", lstr}, {"ablation", true}});
        const auto stats = sr::evaluate_sr(*model, manifest, "test", test_cap);
        results[name] = stats;
        table["rows"].push_back({{"variant", name},
                                 {"lambda_str", lstr},
                                 {"psnr_db", stats.psnr},
                                 {"ssim", stats.ssim},
                                 {"images", stats.count}});
        runlog::event("ablate_variant",
                      {{"variant", name}, {"psnr", stats.psnr}, {"ssim", stats.ssim}});
    }
    table["psnr_gain_db"] = results["with_str"].psnr - results["baseline"].psnr;
    table["ssim_gain"] = results["with_str"].ssim - results["baseline"].ssim;
    std::ofstream out(fs::path(out_dir) / "ablation.json");
    out << table.dump(2) << "\n";
    std::cout << table.dump(2) << "\n";
    ordered_json resolved;
    resolved["class"] = class_id;
    resolved["manifest"] = manifest_path;
    resolved["iters"] = base_cfg.iters;
    resolved["seed"] = base_cfg.seed;
    resolved["lambda_str_on"] = lambda_str_on;
    write_run_manifest(out_dir, "ablate", resolved, {manifest_path});
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    // pre-scan for --config so its values become option defaults (flags win)
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--config") {
            std::ifstream in(argv[i + 1]);
            if (!in) {
                std::cerr << "cannot open config " << argv[i + 1] << "\n";
                return 2;
            }
            in >> g_config;
        }
    }

    CLI::App app{"tonesr: screentone-preserving manga upscaling toolkit"};
    app.require_subcommand(1);
    std::string config_path, log_path;
    app.add_option("--config", config_path, "JSON config; flags override its values");
    app.add_option("--log", log_path, "write JSON-lines logs to this file");
    int threads = cfgv("threads", 0);
    app.add_option("--threads", threads, "worker threads (0 = hardware default)");

    // gen
    auto* gen = app.add_subcommand("gen", "generate a synthetic training dataset");
    std::string gen_registry = cfgv<std::string>("registry", "");
    std::string gen_out = cfgv<std::string>("out", "dataset");
    std::string gen_emit_registry, gen_lineart = cfgv<std::string>("lineart_dir", "");
    std::string gen_classes = cfgv<std::string>("classes", "");
    DatasetOptions gopt;
    gopt.count = cfgv("count", 100);
    gopt.scale = cfgv("scale", 4);
    gopt.hr_size = cfgv("hr_size", 256);
    gopt.seed = cfgv<uint64_t>("seed", 1);
    gopt.jitter_size_rel = cfgv("jitter_size", 0.0f);
    gopt.jitter_gap_rel = cfgv("jitter_gap", 0.0f);
    gopt.jitter_angle_deg = cfgv("jitter_angle", 0.0f);
    bool gen_no_offsets = false, gen_no_flips = false;
    gen->add_option("--registry", gen_registry, "screentone registry JSON");
    gen->add_option("--out", gen_out, "output dataset directory");
    gen->add_option("--count", gopt.count, "samples to generate");
    gen->add_option("--scale", gopt.scale, "SR scale factor")->check(CLI::IsMember({2, 4}));
    gen->add_option("--size", gopt.hr_size, "HR sample size in pixels");
    gen->add_option("--seed", gopt.seed, "dataset seed");
    gen->add_option("--classes", gen_classes, "comma-separated class filter");
    gen->add_option("--jitter-size", gopt.jitter_size_rel, "relative size jitter");
    gen->add_option("--jitter-gap", gopt.jitter_gap_rel, "relative gap jitter");
    gen->add_option("--jitter-angle", gopt.jitter_angle_deg, "absolute angle jitter (deg)");
    gen->add_flag("--no-offsets", gen_no_offsets, "skip offset-field files");
    gen->add_flag("--no-flips", gen_no_flips, "disable flip augmentation");
    gen->add_option("--lineart-dir", gen_lineart,
                    "line drawings (X.png + X_regions.png); procedural when absent");
    gen->add_option("--emit-default-registry", gen_emit_registry,
                    "write the stock 8-class registry to this directory first");

    // train-seg
    auto* tseg = app.add_subcommand("train-seg", "train the segmentation network");
    std::string tseg_manifest = cfgv<std::string>("manifest", ""),
                tseg_out = cfgv<std::string>("out", "models/seg");
    seg::SegTrainConfig scfg;
    scfg.epochs = cfgv("epochs", scfg.epochs);
    scfg.batch = cfgv("batch", scfg.batch);
    scfg.crop = cfgv("crop", scfg.crop);
    scfg.window = cfgv("window", scfg.window);
    scfg.lr = cfgv("lr", scfg.lr);
    scfg.seed = cfgv<uint64_t>("seed", scfg.seed);
    scfg.eval_cap = cfgv("eval_cap", scfg.eval_cap);
    tseg->add_option("--manifest", tseg_manifest, "dataset manifest")->required();
    tseg->add_option("--out", tseg_out, "bundle output directory");
    tseg->add_option("--epochs", scfg.epochs, "training epochs");
    tseg->add_option("--batch", scfg.batch, "batch size");
    tseg->add_option("--crop", scfg.crop, "training crop");
    tseg->add_option("--window", scfg.window, "inference window stored in the bundle");
    tseg->add_option("--lr", scfg.lr, "initial learning rate");
    tseg->add_option("--seed", scfg.seed, "training seed");
    tseg->add_option("--eval-cap", scfg.eval_cap, "pages per split for per-epoch IoU");

    // train-struct
    auto* tstr = app.add_subcommand("train-struct", "train the structural offset network");
    std::string tstr_manifest = cfgv<std::string>("manifest", ""),
                tstr_out = cfgv<std::string>("out", "models/struct");
    std::string tstr_classes = cfgv<std::string>("classes", "");
    sr::StructTrainConfig stcfg;
    stcfg.iters = cfgv("iters", stcfg.iters);
    stcfg.batch = cfgv("batch", stcfg.batch);
    stcfg.crop = cfgv("crop", stcfg.crop);
    stcfg.lr = cfgv("lr", stcfg.lr);
    stcfg.seed = cfgv<uint64_t>("seed", stcfg.seed);
    tstr->add_option("--manifest", tstr_manifest, "dataset manifest (with offsets)")->required();
    tstr->add_option("--out", tstr_out, "bundle output directory");
    tstr->add_option("--classes", tstr_classes, "restrict to these classes");
    tstr->add_option("--iters", stcfg.iters, "training iterations");
    tstr->add_option("--batch", stcfg.batch, "batch size");
    tstr->add_option("--crop", stcfg.crop, "training crop");
    tstr->add_option("--lr", stcfg.lr, "learning rate");
    tstr->add_option("--seed", stcfg.seed, "training seed");

    // train-sr
    auto* tsr = app.add_subcommand("train-sr", "train a per-class SR generator");
    int tsr_class = cfgv("class", 0);
    int tsr_scale = cfgv("scale", 4);
    std::string tsr_manifest = cfgv<std::string>("manifest", ""),
                tsr_out = cfgv<std::string>("out", ""), tsr_struct = cfgv<std::string>("struct", "");
    sr::SRTrainConfig srcfg;
    srcfg.iters = cfgv("iters", srcfg.iters);
    srcfg.warmup_iters = cfgv("warmup_iters", srcfg.warmup_iters);
    srcfg.batch = cfgv("batch", srcfg.batch);
    srcfg.weights.pix = cfgv("lambda_pix", srcfg.weights.pix);
    srcfg.weights.fea = cfgv("lambda_fea", srcfg.weights.fea);
    srcfg.weights.adv = cfgv("lambda_adv", srcfg.weights.adv);
    srcfg.weights.str = cfgv("lambda_str", srcfg.weights.str);
    srcfg.seed = cfgv<uint64_t>("seed", srcfg.seed);
    srcfg.struct_target = cfgv<std::string>("struct_target", srcfg.struct_target);
    tsr->add_option("--class", tsr_class, "screentone class id")->required();
    tsr->add_option("--manifest", tsr_manifest, "dataset manifest")->required();
    tsr->add_option("--out", tsr_out, "bundle output directory")->required();
    tsr->add_option("--struct", tsr_struct, "structural bundle directory");
    tsr->add_option("--scale", tsr_scale, "SR scale")->check(CLI::IsMember({2, 4}));
    tsr->add_option("--iters", srcfg.iters, "training iterations");
    tsr->add_option("--warmup-iters", srcfg.warmup_iters, "pixel-only warmup iterations");
    tsr->add_option("--batch", srcfg.batch, "batch size");
    tsr->add_option("--lambda-pix", srcfg.weights.pix, "pixel loss weight");
    tsr->add_option("--lambda-fea", srcfg.weights.fea, "feature loss weight");
    tsr->add_option("--lambda-adv", srcfg.weights.adv, "adversarial loss weight");
    tsr->add_option("--lambda-str", srcfg.weights.str, "structural loss weight");
    tsr->add_option("--struct-target", srcfg.struct_target,
                    "structural target: analytic | sy")
        ->check(CLI::IsMember({"analytic", "sy"}));
    tsr->add_option("--seed", srcfg.seed, "training seed");

    // segment
    auto* seg_cmd = app.add_subcommand("segment", "classify screentone per pixel");
    std::string seg_model = cfgv<std::string>("model", ""), seg_in, seg_out;
    seg_cmd->add_option("--model", seg_model, "seg bundle directory")->required();
    seg_cmd->add_option("--in", seg_in, "input page PNG")->required();
    seg_cmd->add_option("--out", seg_out, "output mask PNG")->required();

    // fix-mask
    auto* fix = app.add_subcommand("fix-mask", "connected-component mask correction");
    std::string fix_in, fix_out;
    int fix_min_area = cfgv("min_area", 25);
    bool fix_drop = false;
    fix->add_option("--in", fix_in, "input mask PNG")->required();
    fix->add_option("--out", fix_out, "output mask PNG")->required();
    fix->add_option("--min-area", fix_min_area, "suppress components smaller than this");
    fix->add_flag("--drop-to-background", fix_drop,
                  "send small components to class 0 instead of the boundary label");

    // upscale
    auto* up = app.add_subcommand("upscale", "full pipeline: segment, correct, SR, composite");
    std::string up_in, up_out, up_models = cfgv<std::string>("models", "models");
    std::string up_emit_mask, up_report, up_registry = cfgv<std::string>("registry", "");
    pipeline::UpscaleOptions upopt;
    upopt.scale = cfgv("scale", 4);
    upopt.pad = cfgv("pad", upopt.pad);
    upopt.min_area = cfgv("min_area", upopt.min_area);
    bool up_fallback = cfgv("fallback_to_base", false);
    up->add_option("--in", up_in, "input page PNG")->required();
    up->add_option("--out", up_out, "output page PNG")->required();
    up->add_option("--models", up_models, "models directory (seg/, sr_class_<k>/, base/)");
    up->add_option("--scale", upopt.scale, "upscale factor")->check(CLI::IsMember({2, 4}));
    up->add_option("--emit-mask", up_emit_mask, "write the upscaled class mask here");
    up->add_option("--report", up_report, "write the per-region JSON report here");
    up->add_option("--registry", up_registry, "registry JSON (for density measurement kinds)");
    up->add_option("--pad", upopt.pad, "region crop padding (LR px)");
    up->add_option("--min-area", upopt.min_area, "mask correction min area");
    up->add_flag("--fallback-to-base", up_fallback,
                 "keep base SR for classes without a bundle");

    // measure
    auto* meas = app.add_subcommand("measure", "measure screentone density parameters");
    std::string meas_in, meas_kind = "auto", meas_roi, meas_json;
    meas->add_option("--in", meas_in, "input region PNG")->required();
    meas->add_option("--kind", meas_kind, "auto | dot | stripe | grid | tile")
        ->check(CLI::IsMember({"auto", "dot", "stripe", "grid", "tile"}));
    meas->add_option("--roi", meas_roi, "x,y,w,h: measure mean unit area inside this box");
    meas->add_option("--json", meas_json, "write the report JSON here");

    // lbp
    auto* lbp = app.add_subcommand("lbp", "LBP baseline classifier");
    std::string lbp_model, lbp_in, lbp_registry = cfgv<std::string>("registry", ""), lbp_out;
    bool lbp_train_flag = false;
    analysis::LbpTrainOptions lbpopt;
    lbpopt.windows_per_class = cfgv("windows_per_class", lbpopt.windows_per_class);
    lbpopt.window = cfgv("window", lbpopt.window);
    lbpopt.seed = cfgv<uint64_t>("seed", lbpopt.seed);
    lbp->add_option("--model", lbp_model, "LBP model JSON");
    lbp->add_option("--in", lbp_in, "region PNG to classify");
    lbp->add_flag("--train", lbp_train_flag, "build reference histograms from a registry");
    lbp->add_option("--registry", lbp_registry, "registry JSON for --train");
    lbp->add_option("--out", lbp_out, "model output path for --train");
    lbp->add_option("--windows", lbpopt.windows_per_class, "windows per class for --train");
    lbp->add_option("--jitter-size", lbpopt.jitter_size_rel, "size jitter for --train");
    lbp->add_option("--jitter-gap", lbpopt.jitter_gap_rel, "gap jitter for --train");
    lbp->add_option("--jitter-angle", lbpopt.jitter_angle_deg, "angle jitter for --train");

    // eval
    auto* ev = app.add_subcommand("eval", "PSNR/SSIM/IoU/Dice between images or masks");
    std::string ev_pred, ev_truth, ev_pmask, ev_tmask, ev_json;
    ev->add_option("--pred", ev_pred, "predicted image PNG");
    ev->add_option("--truth", ev_truth, "ground-truth image PNG");
    ev->add_option("--pred-mask", ev_pmask, "predicted mask PNG");
    ev->add_option("--truth-mask", ev_tmask, "ground-truth mask PNG");
    ev->add_option("--json", ev_json, "write metric JSON here");

    // ablate
    auto* abl = app.add_subcommand("ablate",
                                   "structural-loss ablation: trains with and without L_str");
    int abl_class = cfgv("class", 6), abl_scale = cfgv("scale", 4),
        abl_test_cap = cfgv("test_cap", 100);
    float abl_lstr = cfgv("lambda_str", 0.1f);
    std::string abl_manifest = cfgv<std::string>("manifest", ""),
                abl_struct = cfgv<std::string>("struct", ""),
                abl_out = cfgv<std::string>("out", "ablation");
    sr::SRTrainConfig ablcfg;
    ablcfg.iters = cfgv("iters", ablcfg.iters);
    ablcfg.warmup_iters = cfgv("warmup_iters", ablcfg.warmup_iters);
    ablcfg.seed = cfgv<uint64_t>("seed", ablcfg.seed);
    abl->add_option("--class", abl_class, "structured class id to ablate");
    abl->add_option("--manifest", abl_manifest, "dataset manifest")->required();
    abl->add_option("--struct", abl_struct, "structural bundle directory")->required();
    abl->add_option("--out", abl_out, "output directory");
    abl->add_option("--scale", abl_scale, "SR scale")->check(CLI::IsMember({2, 4}));
    abl->add_option("--iters", ablcfg.iters, "iterations per variant");
    abl->add_option("--warmup-iters", ablcfg.warmup_iters, "warmup iterations");
    abl->add_option("--lambda-str", abl_lstr, "structural weight for the on-variant");
    abl->add_option("--test-cap", abl_test_cap, "test images per variant");
    abl->add_option("--seed", ablcfg.seed, "training seed (shared by both variants)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;  // help exits 0; anything else is a usage error
    }

    try {
        check_device();
        if (!log_path.empty()) runlog::set_file(log_path);
        if (threads > 0) {
            omp_set_num_threads(threads);
            openblas_set_num_threads(threads);
        }

        if (gen->parsed()) {
            gopt.with_offsets = !gen_no_offsets;
            gopt.flips = !gen_no_flips;
            gopt.lineart_dir = gen_lineart;
            if (!gen_classes.empty()) gopt.class_filter = parse_class_list(gen_classes);
            return run_gen(gen_registry, gen_out, gopt, gen_emit_registry);
        }
        if (tseg->parsed()) return run_train_seg(tseg_manifest, tseg_out, scfg);
        if (tstr->parsed())
            return run_train_struct(tstr_manifest, tstr_out,
                                    tstr_classes.empty() ? std::vector<int>{}
                                                         : parse_class_list(tstr_classes),
                                    stcfg);
        if (tsr->parsed())
            return run_train_sr(tsr_class, tsr_manifest, tsr_out, tsr_struct, tsr_scale, srcfg);
        if (seg_cmd->parsed()) return run_segment(seg_model, seg_in, seg_out);
        if (fix->parsed()) return run_fix_mask(fix_in, fix_out, fix_min_area, fix_drop);
        if (up->parsed()) {
            upopt.fallback_to_base = up_fallback;
            return run_upscale(up_in, up_models, up_out, up_emit_mask, up_report, up_registry,
                               upopt);
        }
        if (meas->parsed()) return run_measure(meas_in, meas_kind, meas_roi, meas_json);
        if (lbp->parsed())
            return run_lbp(lbp_model, lbp_in, lbp_train_flag, lbp_registry, lbp_out, lbpopt);
        if (ev->parsed()) return run_eval(ev_pred, ev_truth, ev_pmask, ev_tmask, ev_json);
        if (abl->parsed())
            return run_ablate(abl_class, abl_manifest, abl_struct, abl_out, abl_scale, ablcfg,
                              abl_test_cap, abl_lstr);
        return 2;
    } catch (const ConfigError& e) {
        runlog::event("error", {{"message", e.what()}}, "error");
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        runlog::event("error", {{"message", e.what()}}, "error");
        std::cerr << "invalid argument: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        runlog::event("error", {{"message", e.what()}}, "error");
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
