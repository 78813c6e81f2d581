#include "avshield/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "avshield/checkpoint.hpp"
#include "avshield/image_io.hpp"
#include "avshield/metrics.hpp"
#include "avshield/parallel.hpp"
#include "avshield/sampler.hpp"
#include "avshield/synthetic_dataset.hpp"
#include "avshield/train.hpp"
#include "avshield/version.hpp"
#include "avshield/wav_io.hpp"

namespace fs = std::filesystem;

namespace avshield {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) return;
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key))
            throw ConfigError("unknown config key '" + key + "' in " + where);
}

std::vector<std::string> string_list(const json& j, const std::string& where) {
    if (j.is_string()) return {j.get<std::string>()};
    if (!j.is_array()) throw ConfigError(where + ": expected string or array of strings");
    std::vector<std::string> out;
    for (const auto& e : j) out.push_back(e.get<std::string>());
    return out;
}

PurifierSpec purifier_from_json(const json& j) {
    check_keys(j, {"kind", "quality", "factor", "window", "hop", "percentile", "attenuation",
                   "over_factor", "floor"},
               "purifiers[]");
    PurifierSpec spec;
    spec.kind = j.at("kind").get<std::string>();
    spec.jpeg_quality = j.value("quality", spec.jpeg_quality);
    spec.resize_factor = j.value("factor", spec.resize_factor);
    spec.stft_window = j.value("window", spec.stft_window);
    spec.stft_hop = j.value("hop", spec.stft_hop);
    spec.gate_percentile = j.value("percentile", spec.gate_percentile);
    spec.gate_attenuation = j.value("attenuation", spec.gate_attenuation);
    spec.subtract_over_factor = j.value("over_factor", spec.subtract_over_factor);
    spec.subtract_floor = j.value("floor", spec.subtract_floor);
    spec.validate();
    return spec;
}

ordered_json purifier_to_json(const PurifierSpec& spec) {
    ordered_json j;
    j["kind"] = spec.kind;
    if (spec.kind == "jpeg") j["quality"] = spec.jpeg_quality;
    if (spec.kind == "resize") j["factor"] = spec.resize_factor;
    if (spec.is_audio()) {
        j["window"] = spec.stft_window;
        j["hop"] = spec.stft_hop;
    }
    if (spec.kind == "spectral_gate") {
        j["percentile"] = spec.gate_percentile;
        j["attenuation"] = spec.gate_attenuation;
    }
    if (spec.kind == "spectral_subtract") {
        j["over_factor"] = spec.subtract_over_factor;
        j["floor"] = spec.subtract_floor;
    }
    return j;
}

} // namespace

Rect default_mouth_region(int image_size) {
    Rect r;
    r.y0 = static_cast<int>(image_size * 0.58);
    r.y1 = static_cast<int>(image_size * 0.85);
    r.x0 = static_cast<int>(image_size * 0.30);
    r.x1 = static_cast<int>(image_size * 0.70);
    return r;
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config parse error: " + std::string(e.what()));
    }
    return from_json(j);
}

RunConfig RunConfig::from_json(const json& j) {
    check_keys(j, {"mode", "checkpoint", "inputs", "image_attack", "audio_attack", "interval_plan",
                   "caf_plan", "purifiers", "generation", "mouth_region", "ablation", "seed",
                   "output_dir", "save_frames"},
               "config");
    RunConfig cfg;
    cfg.mode = j.value("mode", "");
    cfg.checkpoint = j.value("checkpoint", "");
    if (j.contains("inputs")) {
        const auto& ji = j.at("inputs");
        check_keys(ji, {"images", "audio", "protected_images", "protected_audio", "synthetic"},
                   "inputs");
        if (ji.contains("images")) cfg.images = string_list(ji.at("images"), "inputs.images");
        if (ji.contains("audio")) cfg.audio = string_list(ji.at("audio"), "inputs.audio");
        if (ji.contains("protected_images"))
            cfg.protected_images = string_list(ji.at("protected_images"), "inputs.protected_images");
        if (ji.contains("protected_audio"))
            cfg.protected_audio = string_list(ji.at("protected_audio"), "inputs.protected_audio");
        if (ji.contains("synthetic")) {
            const auto& js = ji.at("synthetic");
            check_keys(js, {"clips", "seconds"}, "inputs.synthetic");
            cfg.synthetic.clips = js.value("clips", 0);
            cfg.synthetic.seconds = js.value("seconds", 0.8);
        }
    }
    if (j.contains("image_attack")) {
        const auto& ja = j.at("image_attack");
        check_keys(ja, {"tau", "eta", "iters"}, "image_attack");
        cfg.image_attack.tau = ja.value("tau", cfg.image_attack.tau);
        cfg.image_attack.eta = ja.value("eta", cfg.image_attack.eta);
        cfg.image_attack.iters = ja.value("iters", cfg.image_attack.iters);
    }
    if (j.contains("audio_attack")) {
        const auto& ja = j.at("audio_attack");
        check_keys(ja, {"db_bound", "eta", "iters"}, "audio_attack");
        cfg.audio_attack.db_bound = ja.value("db_bound", cfg.audio_attack.db_bound);
        cfg.audio_attack.eta = ja.value("eta", cfg.audio_attack.eta);
        cfg.audio_attack.iters = ja.value("iters", cfg.audio_attack.iters);
    }
    if (j.contains("interval_plan")) {
        const auto& jp = j.at("interval_plan");
        check_keys(jp, {"intervals", "weights"}, "interval_plan");
        IntervalPlan plan;
        for (const auto& iv : jp.at("intervals"))
            plan.intervals.emplace_back(iv.at(0).get<int>(), iv.at(1).get<int>());
        if (jp.contains("weights"))
            plan.weights = jp.at("weights").get<std::vector<double>>();
        else
            plan.weights.assign(plan.intervals.size(), 1.0 / plan.intervals.size());
        cfg.interval_plan = std::move(plan);
    }
    if (j.contains("caf_plan")) {
        CafTargetPlan plan;
        for (const auto& je : j.at("caf_plan")) {
            check_keys(je, {"interval", "units"}, "caf_plan[]");
            CafTargetPlan::Entry entry;
            entry.interval = {je.at("interval").at(0).get<int>(), je.at("interval").at(1).get<int>()};
            for (const auto& u : je.at("units")) entry.units.insert(parse_unit(u.get<std::string>()));
            plan.entries.push_back(std::move(entry));
        }
        cfg.caf_plan = std::move(plan);
    }
    if (j.contains("purifiers"))
        for (const auto& jp : j.at("purifiers")) cfg.purifiers.push_back(purifier_from_json(jp));
    if (j.contains("generation")) {
        const auto& jg = j.at("generation");
        check_keys(jg, {"steps"}, "generation");
        cfg.generation.steps = jg.value("steps", cfg.generation.steps);
    }
    if (j.contains("mouth_region") && !j.at("mouth_region").is_null()) {
        const auto& jm = j.at("mouth_region");
        if (!jm.is_array() || jm.size() != 4)
            throw ConfigError("mouth_region: expected [y0, x0, y1, x1]");
        cfg.mouth_region = Rect{jm.at(0).get<int>(), jm.at(1).get<int>(), jm.at(2).get<int>(),
                                jm.at(3).get<int>()};
    }
    if (j.contains("ablation")) {
        const auto& ja = j.at("ablation");
        check_keys(ja, {"sweep"}, "ablation");
        cfg.ablation_sweep = ja.value("sweep", cfg.ablation_sweep);
    }
    if (j.contains("seed")) {
        cfg.seed = j.at("seed").get<std::uint64_t>();
        cfg.seed_set = true;
    }
    cfg.output_dir = j.value("output_dir", cfg.output_dir);
    cfg.save_frames = j.value("save_frames", cfg.save_frames);
    return cfg;
}

ordered_json RunConfig::to_json() const {
    ordered_json j;
    j["mode"] = mode;
    j["checkpoint"] = checkpoint;
    ordered_json inputs;
    inputs["images"] = images;
    inputs["audio"] = audio;
    inputs["protected_images"] = protected_images;
    inputs["protected_audio"] = protected_audio;
    inputs["synthetic"] = {{"clips", synthetic.clips}, {"seconds", synthetic.seconds}};
    j["inputs"] = std::move(inputs);
    j["image_attack"] = {{"tau", image_attack.tau}, {"eta", image_attack.eta},
                         {"iters", image_attack.iters}};
    j["audio_attack"] = {{"db_bound", audio_attack.db_bound}, {"eta", audio_attack.eta},
                         {"iters", audio_attack.iters}};
    ordered_json intervals = ordered_json::array();
    for (const auto& [lo, hi] : interval_plan.intervals) intervals.push_back({lo, hi});
    j["interval_plan"] = {{"intervals", std::move(intervals)}, {"weights", interval_plan.weights}};
    ordered_json caf = ordered_json::array();
    for (const auto& e : caf_plan.entries) {
        ordered_json units = ordered_json::array();
        for (const auto& u : e.units) units.push_back(u.name());
        caf.push_back({{"interval", {e.interval.first, e.interval.second}}, {"units", units}});
    }
    j["caf_plan"] = std::move(caf);
    ordered_json purs = ordered_json::array();
    for (const auto& p : purifiers) purs.push_back(purifier_to_json(p));
    j["purifiers"] = std::move(purs);
    j["generation"] = {{"steps", generation.steps}};
    if (mouth_region)
        j["mouth_region"] = {mouth_region->y0, mouth_region->x0, mouth_region->y1, mouth_region->x1};
    else
        j["mouth_region"] = nullptr;
    j["ablation"] = {{"sweep", ablation_sweep}};
    j["seed"] = seed;
    j["output_dir"] = output_dir;
    j["save_frames"] = save_frames;
    return j;
}

std::string RunConfig::digest() const { return fnv_digest(to_json().dump()); }

void RunConfig::validate() const {
    static const std::set<std::string> modes = {"train-toy", "protect-image", "protect-audio",
                                                "protect",   "generate",      "purify",
                                                "evaluate",  "ablate"};
    if (!modes.count(mode)) throw ConfigError("unknown mode: " + mode);
    const bool needs_seed = mode == "protect" || mode == "protect-image" ||
                            mode == "protect-audio" || mode == "ablate";
    if (needs_seed && !seed_set) throw ConfigError("mode " + mode + " requires an explicit seed");
    image_attack.validate();
    audio_attack.validate();
    for (const auto& p : purifiers) p.validate();
    if (generation.steps < 1) throw ConfigError("generation.steps must be >= 1");
}

std::string effective_output_dir(const RunConfig& cfg) {
    if (const char* env = std::getenv("AVSHIELD_OUT_DIR"))
        if (env[0] != '\0') return std::string(env);
    return cfg.output_dir;
}

namespace {

std::vector<std::string> expand_paths(const std::vector<std::string>& paths,
                                      const std::string& extension) {
    std::vector<std::string> files;
    for (const auto& p : paths) {
        if (fs::is_directory(p)) {
            std::vector<std::string> dir_files;
            for (const auto& e : fs::directory_iterator(p))
                if (e.is_regular_file() && e.path().extension() == extension)
                    dir_files.push_back(e.path().string());
            std::sort(dir_files.begin(), dir_files.end());
            files.insert(files.end(), dir_files.begin(), dir_files.end());
        } else {
            files.push_back(p);
        }
    }
    return files;
}

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read: " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return fnv_digest(bytes);
}

double linf(const PortraitImage& a, const PortraitImage& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i)
        m = std::max(m, std::abs(a.pixels[i] - b.pixels[i]));
    return m;
}

std::vector<double> delta_of(const AudioClip& a, const AudioClip& b) {
    std::vector<double> d(a.samples.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = b.samples[i] - a.samples[i];
    return d;
}

} // namespace

IngestResult ingest(const RunConfig& cfg, int image_size) {
    IngestResult result;
    std::vector<std::pair<std::string, PortraitImage>> images; // id, image
    std::vector<std::pair<std::string, AudioClip>> clips;

    if (cfg.synthetic.clips > 0) {
        auto corpus = make_synthetic_dataset(cfg.synthetic.clips, cfg.seed,
                                             image_size > 0 ? image_size : 64, cfg.synthetic.seconds);
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            WorkItem item;
            item.name = "syn" + std::to_string(i);
            item.portrait_id = "syn" + std::to_string(i) + "-img";
            item.audio_id = "syn" + std::to_string(i) + "-aud";
            item.portrait = corpus[i].reference;
            item.clip = corpus[i].audio;
            item.mouth = corpus[i].mouth_region;
            result.items.push_back(std::move(item));
        }
        return result;
    }

    for (const auto& path : expand_paths(cfg.images, ".png")) {
        try {
            PortraitImage img = load_png(path);
            if (image_size > 0 && (img.height != image_size || img.width != image_size))
                img = resize_bilinear(img, image_size, image_size);
            img.validate();
            images.emplace_back(file_digest(path), std::move(img));
        } catch (const Error& e) {
            result.warnings.push_back(path + ": " + e.what());
        }
    }
    for (const auto& path : expand_paths(cfg.audio, ".wav")) {
        try {
            AudioClip clip = load_wav(path);
            clip.validate();
            clips.emplace_back(file_digest(path), std::move(clip));
        } catch (const Error& e) {
            result.warnings.push_back(path + ": " + e.what());
        }
    }
    if (images.empty() || clips.empty()) {
        result.warnings.push_back("no usable input pairs (images: " + std::to_string(images.size()) +
                                  ", audio: " + std::to_string(clips.size()) + ")");
        return result;
    }
    // pair by index; a single item on either side broadcasts
    const std::size_t n = std::max(images.size(), clips.size());
    if (images.size() != clips.size() && images.size() != 1 && clips.size() != 1)
        throw ConfigError("inputs: image/audio counts must match (or one side be a single item)");
    for (std::size_t i = 0; i < n; ++i) {
        const auto& [img_id, img] = images[images.size() == 1 ? 0 : i];
        const auto& [aud_id, clip] = clips[clips.size() == 1 ? 0 : i];
        WorkItem item;
        item.name = "item" + std::to_string(i);
        item.portrait_id = img_id;
        item.audio_id = aud_id;
        item.portrait = img;
        item.clip = clip;
        item.mouth = cfg.mouth_region ? *cfg.mouth_region : default_mouth_region(img.height);
        result.items.push_back(std::move(item));
    }
    return result;
}

namespace {

struct ItemSeeds {
    std::uint64_t image_attack;
    std::uint64_t audio_attack;
    std::uint64_t generate;
    std::uint64_t validation;
};

ItemSeeds item_seeds(const RunConfig& cfg, const WorkItem& item) {
    Rng base = Rng(cfg.seed).derive(Rng::mix(Rng::fnv1a(item.portrait_id), Rng::fnv1a(item.audio_id)));
    return {base.derive("image-attack").seed(), base.derive("audio-attack").seed(),
            base.derive("generate").seed(), base.derive("validation").seed()};
}

struct RunDirs {
    fs::path root;
    fs::path artifacts;
};

RunDirs prepare_dirs(const RunConfig& cfg) {
    RunDirs d;
    d.root = effective_output_dir(cfg);
    d.artifacts = d.root / "artifacts";
    fs::create_directories(d.artifacts);
    return d;
}

void save_frames_dir(const FrameSequence& seq, const fs::path& dir) {
    fs::create_directories(dir);
    for (std::size_t i = 0; i < seq.frames.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "%03zu.png", i);
        save_png(seq.frames[i], (dir / name).string());
    }
}

EvalReport base_report(const RunConfig& cfg) {
    EvalReport report;
    report.tool_version = kVersion;
    report.mode = cfg.mode;
    report.config_digest = cfg.digest();
    report.run_id = report.config_digest.substr(0, 12) + "-" + cfg.mode;
    report.master_seed = cfg.seed;
    return report;
}

VictimModel require_model(const RunConfig& cfg) {
    if (cfg.checkpoint.empty()) throw ConfigError("mode " + cfg.mode + " requires a checkpoint");
    VictimModel model = load_checkpoint(cfg.checkpoint);
    cfg.interval_plan.validate(model.schedule().T);
    cfg.caf_plan.validate(model.schedule().T);
    return model;
}

} // namespace

EvalReport run_protect(const RunConfig& cfg) {
    VictimModel model = require_model(cfg);
    IngestResult in = ingest(cfg, model.config().image_size);
    RunDirs dirs = prepare_dirs(cfg);
    EvalReport report = base_report(cfg);
    for (const auto& w : in.warnings) {
        EvalRecord rec;
        rec.item = "warning";
        rec.portrait_id = w;
        report.records.push_back(std::move(rec));
    }

    const bool do_image = cfg.mode == "protect" || cfg.mode == "protect-image";
    const bool do_audio = cfg.mode == "protect" || cfg.mode == "protect-audio";

    std::vector<EvalRecord> records(in.items.size());
    parallel_for(static_cast<int>(in.items.size()), [&](int idx) {
        const WorkItem& item = in.items[idx];
        const ItemSeeds seeds = item_seeds(cfg, item);
        EvalRecord rec;
        rec.item = item.name;
        rec.portrait_id = item.portrait_id;
        rec.audio_id = item.audio_id;
        rec.seed = seeds.generate;

        PortraitImage protected_img = item.portrait;
        AudioClip protected_aud = item.clip;
        if (do_image) {
            ImageAttackConfig iac = cfg.image_attack;
            iac.seed = seeds.image_attack;
            auto r = attack_image(model, item.portrait, item.clip, iac, cfg.interval_plan);
            protected_img = std::move(r.protected_image);
            rec.traces["image_loss"] = std::move(r.loss_trace);
        }
        if (do_audio) {
            AudioAttackConfig aac = cfg.audio_attack;
            aac.seed = seeds.audio_attack;
            auto r = attack_audio(model, item.portrait, item.clip, aac, cfg.caf_plan);
            protected_aud = std::move(r.protected_audio);
            rec.traces["audio_loss"] = std::move(r.loss_trace);
        }

        FrameSequence clean = sample_frames(model, item.portrait, item.clip,
                                            cfg.generation.steps, seeds.generate);
        FrameSequence prot = sample_frames(model, protected_img, protected_aud,
                                           cfg.generation.steps, seeds.generate);

        rec.put("i_psnr", psnr(item.portrait, protected_img));
        rec.put("i_ssim", ssim(item.portrait, protected_img));
        rec.put("linf", linf(item.portrait, protected_img));
        rec.put("snr", snr(item.clip, protected_aud));
        rec.put("db_x", db_x(delta_of(item.clip, protected_aud), item.clip.samples));
        rec.put("v_psnr", psnr_frames(clean, prot));
        rec.put("v_ssim", ssim_frames(clean, prot));
        rec.put("sync_clean", sync_proxy(clean, item.clip, item.mouth));
        rec.put("sync_protected", sync_proxy(prot, protected_aud, item.mouth));

        const fs::path item_dir = dirs.artifacts / item.name;
        fs::create_directories(item_dir);
        save_png(protected_img, (item_dir / "protected.png").string(), 16);
        rec.artifacts["protected_image"] = (fs::path("artifacts") / item.name / "protected.png").string();
        save_wav(protected_aud, (item_dir / "protected.wav").string());
        rec.artifacts["protected_audio"] = (fs::path("artifacts") / item.name / "protected.wav").string();
        if (cfg.save_frames) {
            save_frames_dir(clean, item_dir / "clean_frames");
            save_frames_dir(prot, item_dir / "protected_frames");
            rec.artifacts["clean_frames"] = (fs::path("artifacts") / item.name / "clean_frames").string();
            rec.artifacts["protected_frames"] =
                (fs::path("artifacts") / item.name / "protected_frames").string();
        }
        records[idx] = std::move(rec);
    });
    for (auto& r : records) report.records.push_back(std::move(r));
    return report;
}

EvalReport run_purification_matrix(const RunConfig& cfg) {
    VictimModel model = require_model(cfg);
    if (cfg.purifiers.empty()) throw ConfigError("purification matrix: no purifiers configured");
    IngestResult in = ingest(cfg, model.config().image_size);
    RunDirs dirs = prepare_dirs(cfg);
    EvalReport report = base_report(cfg);

    std::vector<std::vector<EvalRecord>> per_item(in.items.size());
    parallel_for(static_cast<int>(in.items.size()), [&](int idx) {
        const WorkItem& item = in.items[idx];
        const ItemSeeds seeds = item_seeds(cfg, item);

        ImageAttackConfig iac = cfg.image_attack;
        iac.seed = seeds.image_attack;
        PortraitImage p_prot =
            attack_image(model, item.portrait, item.clip, iac, cfg.interval_plan).protected_image;
        AudioAttackConfig aac = cfg.audio_attack;
        aac.seed = seeds.audio_attack;
        AudioClip a_prot = attack_audio(model, item.portrait, item.clip, aac, cfg.caf_plan).protected_audio;

        FrameSequence clean = sample_frames(model, item.portrait, item.clip,
                                            cfg.generation.steps, seeds.generate);

        auto evaluate_pair = [&](const std::string& label, const PortraitImage& pi,
                                 const AudioClip& ai) {
            EvalRecord rec;
            rec.item = item.name + "/" + label;
            rec.portrait_id = item.portrait_id;
            rec.audio_id = item.audio_id;
            rec.seed = seeds.generate;
            FrameSequence gen = sample_frames(model, pi, ai, cfg.generation.steps, seeds.generate);
            rec.put("i_psnr", psnr(item.portrait, pi));
            rec.put("i_ssim", ssim(item.portrait, pi));
            rec.put("snr", snr(item.clip, ai));
            rec.put("v_psnr", psnr_frames(clean, gen));
            rec.put("v_ssim", ssim_frames(clean, gen));
            rec.put("sync", sync_proxy(gen, ai, item.mouth));
            rec.put("sync_clean", sync_proxy(clean, item.clip, item.mouth));
            per_item[idx].push_back(std::move(rec));
        };

        for (const auto& spec : cfg.purifiers) {
            if (spec.is_image()) {
                PortraitImage purified = purify_image(p_prot, spec);
                evaluate_pair(spec.label() + "/image-only", purified, item.clip);
                evaluate_pair(spec.label() + "/multimodal", purified, a_prot);
            } else {
                AudioClip purified = purify_audio(a_prot, spec);
                evaluate_pair(spec.label() + "/audio-only", item.portrait, purified);
                evaluate_pair(spec.label() + "/multimodal", p_prot, purified);
            }
        }
    });
    (void)dirs;
    for (auto& recs : per_item)
        for (auto& r : recs) report.records.push_back(std::move(r));
    return report;
}

EvalReport run_ablation(const RunConfig& cfg) {
    VictimModel model = require_model(cfg);
    IngestResult in = ingest(cfg, model.config().image_size);
    EvalReport report = base_report(cfg);
    const int T = model.schedule().T;

    struct Cell {
        std::string label;
        bool image_stream;
        IntervalPlan interval_plan;
        CafTargetPlan caf_plan;
    };
    std::vector<Cell> cells;
    if (cfg.ablation_sweep == "intervals") {
        const std::vector<std::pair<int, int>> singles = {
            {1, 100}, {200, 300}, {500, 600}, {700, 800}, {900, 1000}};
        for (const auto& iv : singles) {
            IntervalPlan plan;
            plan.intervals = {iv};
            plan.weights = {1.0};
            cells.push_back({"interval[" + std::to_string(iv.first) + "," +
                                 std::to_string(iv.second) + "]",
                             true, plan, {}});
        }
        cells.push_back({"mis", true, cfg.interval_plan, {}});
    } else if (cfg.ablation_sweep == "layers") {
        for (const auto& layer : unit_layers()) {
            CafTargetPlan plan;
            plan.entries = {{{700, std::min(1000, T)}, {{layer, "lip"}}}};
            cells.push_back({"layer_" + layer, false, {}, plan});
        }
        cells.push_back({"caf", false, {}, cfg.caf_plan});
    } else if (cfg.ablation_sweep == "unit_intervals") {
        const std::vector<std::pair<int, int>> ivs = {{1, 100}, {400, 600}, {900, 1000}};
        for (const auto& iv : ivs) {
            CafTargetPlan plan;
            plan.entries = {{{iv.first, std::min(iv.second, T)}, {{"mid_0", "lip"}}}};
            cells.push_back({"mid_0_lip[" + std::to_string(iv.first) + "," +
                                 std::to_string(iv.second) + "]",
                             false, {}, plan});
        }
        cells.push_back({"caf", false, {}, cfg.caf_plan});
    } else {
        throw ConfigError("unknown ablation sweep: " + cfg.ablation_sweep);
    }

    const std::vector<int> val_grid = {50, 150, 350, 950};
    struct Job {
        int item;
        int cell;
    };
    std::vector<Job> jobs;
    for (std::size_t i = 0; i < in.items.size(); ++i)
        for (std::size_t c = 0; c < cells.size(); ++c)
            jobs.push_back({static_cast<int>(i), static_cast<int>(c)});
    std::vector<EvalRecord> records(jobs.size());

    parallel_for(static_cast<int>(jobs.size()), [&](int jidx) {
        const WorkItem& item = in.items[jobs[jidx].item];
        const Cell& cell = cells[jobs[jidx].cell];
        const ItemSeeds seeds = item_seeds(cfg, item); // shared across cells for pairing
        EvalRecord rec;
        rec.item = item.name + "/" + cell.label;
        rec.portrait_id = item.portrait_id;
        rec.audio_id = item.audio_id;

        if (cell.image_stream) {
            rec.seed = seeds.image_attack;
            ImageAttackConfig iac = cfg.image_attack;
            iac.seed = seeds.image_attack;
            const double before = nullifying_validation_loss(model, item.portrait, item.clip,
                                                             val_grid, seeds.validation);
            auto r = attack_image(model, item.portrait, item.clip, iac, cell.interval_plan);
            const double after = nullifying_validation_loss(model, r.protected_image, item.clip,
                                                            val_grid, seeds.validation);
            FrameSequence clean = sample_frames(model, item.portrait, item.clip,
                                                cfg.generation.steps, seeds.generate);
            FrameSequence prot = sample_frames(model, r.protected_image, item.clip,
                                               cfg.generation.steps, seeds.generate);
            rec.put("val_loss_before", before);
            rec.put("val_loss_after", after);
            rec.put("v_psnr", psnr_frames(clean, prot));
            rec.put("v_ssim", ssim_frames(clean, prot));
            rec.put("sync", sync_proxy(prot, item.clip, item.mouth));
            rec.put("sync_clean", sync_proxy(clean, item.clip, item.mouth));
        } else {
            rec.seed = seeds.audio_attack;
            AudioAttackConfig aac = cfg.audio_attack;
            aac.seed = seeds.audio_attack;
            const double before = caf_validation_variance(model, item.portrait, item.clip,
                                                          cell.caf_plan, seeds.validation);
            auto r = attack_audio(model, item.portrait, item.clip, aac, cell.caf_plan);
            const double after = caf_validation_variance(model, item.portrait, r.protected_audio,
                                                         cell.caf_plan, seeds.validation);
            FrameSequence clean = sample_frames(model, item.portrait, item.clip,
                                                cfg.generation.steps, seeds.generate);
            FrameSequence prot = sample_frames(model, item.portrait, r.protected_audio,
                                               cfg.generation.steps, seeds.generate);
            rec.put("attn_var_before", before);
            rec.put("attn_var_after", after);
            rec.put("v_psnr", psnr_frames(clean, prot));
            rec.put("v_ssim", ssim_frames(clean, prot));
            rec.put("sync", sync_proxy(prot, r.protected_audio, item.mouth));
            rec.put("sync_clean", sync_proxy(clean, item.clip, item.mouth));
        }
        records[jidx] = std::move(rec);
    });
    for (auto& r : records) report.records.push_back(std::move(r));
    return report;
}

EvalReport run_generate(const RunConfig& cfg) {
    VictimModel model = require_model(cfg);
    IngestResult in = ingest(cfg, model.config().image_size);
    RunDirs dirs = prepare_dirs(cfg);
    EvalReport report = base_report(cfg);
    for (std::size_t i = 0; i < in.items.size(); ++i) {
        const WorkItem& item = in.items[i];
        const ItemSeeds seeds = item_seeds(cfg, item);
        FrameSequence frames = sample_frames(model, item.portrait, item.clip,
                                             cfg.generation.steps, seeds.generate);
        EvalRecord rec;
        rec.item = item.name;
        rec.portrait_id = item.portrait_id;
        rec.audio_id = item.audio_id;
        rec.seed = seeds.generate;
        rec.put("sync", sync_proxy(frames, item.clip, item.mouth));
        const fs::path dir = dirs.artifacts / item.name / "frames";
        save_frames_dir(frames, dir);
        rec.artifacts["frames"] = (fs::path("artifacts") / item.name / "frames").string();
        report.records.push_back(std::move(rec));
    }
    return report;
}

EvalReport run_purify(const RunConfig& cfg) {
    if (cfg.purifiers.empty()) throw ConfigError("purify: no purifiers configured");
    IngestResult in = ingest(cfg, 0); // native sizes
    RunDirs dirs = prepare_dirs(cfg);
    EvalReport report = base_report(cfg);
    for (const auto& item : in.items) {
        for (const auto& spec : cfg.purifiers) {
            EvalRecord rec;
            rec.item = item.name + "/" + spec.label();
            rec.portrait_id = item.portrait_id;
            rec.audio_id = item.audio_id;
            const fs::path dir = dirs.artifacts / item.name;
            fs::create_directories(dir);
            if (spec.is_image()) {
                PortraitImage out = purify_image(item.portrait, spec);
                rec.put("i_psnr", psnr(item.portrait, out));
                rec.put("i_ssim", ssim(item.portrait, out));
                const std::string name = spec.label() + ".png";
                save_png(out, (dir / name).string(), 16);
                rec.artifacts["purified_image"] = (fs::path("artifacts") / item.name / name).string();
            } else {
                AudioClip out = purify_audio(item.clip, spec);
                rec.put("snr", snr(item.clip, out));
                const std::string name = spec.label() + ".wav";
                save_wav(out, (dir / name).string());
                rec.artifacts["purified_audio"] = (fs::path("artifacts") / item.name / name).string();
            }
            report.records.push_back(std::move(rec));
        }
    }
    return report;
}

EvalReport run_evaluate(const RunConfig& cfg) {
    EvalReport report = base_report(cfg);
    std::optional<VictimModel> model;
    if (!cfg.checkpoint.empty()) model = load_checkpoint(cfg.checkpoint);
    const int image_size = model ? model->config().image_size : 0;

    const auto clean_imgs = expand_paths(cfg.images, ".png");
    const auto prot_imgs = expand_paths(cfg.protected_images, ".png");
    const auto clean_auds = expand_paths(cfg.audio, ".wav");
    const auto prot_auds = expand_paths(cfg.protected_audio, ".wav");
    if (clean_imgs.size() != prot_imgs.size() || clean_auds.size() != prot_auds.size())
        throw ConfigError("evaluate: clean/protected lists must pair up");

    const std::size_t n = std::max(clean_imgs.size(), clean_auds.size());
    for (std::size_t i = 0; i < n; ++i) {
        EvalRecord rec;
        rec.item = "pair" + std::to_string(i);
        std::optional<PortraitImage> p0, p1;
        std::optional<AudioClip> a0, a1;
        if (i < clean_imgs.size()) {
            p0 = load_png(clean_imgs[i]);
            p1 = load_png(prot_imgs[i]);
            if (image_size > 0) {
                if (p0->height != image_size) *p0 = resize_bilinear(*p0, image_size, image_size);
                if (p1->height != image_size) *p1 = resize_bilinear(*p1, image_size, image_size);
            }
            rec.portrait_id = file_digest(clean_imgs[i]);
            rec.put("i_psnr", psnr(*p0, *p1));
            rec.put("i_ssim", ssim(*p0, *p1));
            rec.put("linf", linf(*p0, *p1));
        }
        if (i < clean_auds.size()) {
            a0 = load_wav(clean_auds[i]);
            a1 = load_wav(prot_auds[i]);
            rec.audio_id = file_digest(clean_auds[i]);
            if (a0->samples.size() == a1->samples.size()) {
                rec.put("snr", snr(*a0, *a1));
                rec.put("db_x", db_x(delta_of(*a0, *a1), a0->samples));
            }
        }
        if (model && p0 && p1 && a0 && a1) {
            Rng pair_rng = Rng(cfg.seed).derive(Rng::mix(i, 0x6576616c));
            const std::uint64_t gen_seed = pair_rng.seed();
            Rect mouth = cfg.mouth_region ? *cfg.mouth_region : default_mouth_region(image_size);
            FrameSequence clean = sample_frames(*model, *p0, *a0, cfg.generation.steps, gen_seed);
            FrameSequence prot = sample_frames(*model, *p1, *a1, cfg.generation.steps, gen_seed);
            rec.put("v_psnr", psnr_frames(clean, prot));
            rec.put("v_ssim", ssim_frames(clean, prot));
            rec.put("sync_clean", sync_proxy(clean, *a0, mouth));
            rec.put("sync_protected", sync_proxy(prot, *a1, mouth));
        }
        report.records.push_back(std::move(rec));
    }
    return report;
}

EvalReport run_train_toy(const RunConfig& cfg, int clips, int epochs) {
    RunDirs dirs = prepare_dirs(cfg);
    EvalReport report = base_report(cfg);
    VictimConfig vc;
    VictimModel model(vc, cfg.seed);
    auto corpus = make_synthetic_dataset(clips, Rng::mix(cfg.seed, 0x636f72), vc.image_size,
                                         cfg.synthetic.seconds);
    TrainConfig tc;
    tc.epochs = epochs;
    TrainResult tr = train_toy(model, corpus, tc, cfg.seed);
    const std::string ckpt = (dirs.root / "model.json").string();
    save_checkpoint(model, ckpt);

    EvalRecord rec;
    rec.item = "training";
    rec.seed = cfg.seed;
    rec.put("initial_val_loss", tr.initial_val_loss);
    rec.put("final_val_loss", tr.final_val_loss);
    rec.traces["epoch_loss"] = tr.epoch_loss;
    rec.artifacts["checkpoint"] = "model.json";
    report.records.push_back(std::move(rec));
    return report;
}

EvalReport execute_run(const RunConfig& cfg) {
    cfg.validate();
    EvalReport report;
    if (cfg.mode == "protect" || cfg.mode == "protect-image" || cfg.mode == "protect-audio") {
        report = cfg.purifiers.empty() ? run_protect(cfg) : run_purification_matrix(cfg);
    } else if (cfg.mode == "generate") {
        report = run_generate(cfg);
    } else if (cfg.mode == "purify") {
        report = run_purify(cfg);
    } else if (cfg.mode == "evaluate") {
        report = run_evaluate(cfg);
    } else if (cfg.mode == "ablate") {
        report = run_ablation(cfg);
    } else if (cfg.mode == "train-toy") {
        report = run_train_toy(cfg, cfg.synthetic.clips > 0 ? cfg.synthetic.clips : 6, 60);
    } else {
        throw ConfigError("unhandled mode: " + cfg.mode);
    }
    const fs::path root = effective_output_dir(cfg);
    fs::create_directories(root);
    {
        std::ofstream out(root / "config.json");
        out << cfg.to_json().dump(1) << "\n";
    }
    emit_report(report, (root / "report.json").string());
    return report;
}

} // namespace avshield
