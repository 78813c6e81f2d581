#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "avshield/harness.hpp"
#include "avshield/version.hpp"

using namespace avshield;

namespace {

// Shared flags layered over an optional config file; flags win.
struct CommonArgs {
    std::string config_path;
    std::string checkpoint;
    std::vector<std::string> images;
    std::vector<std::string> audio;
    std::string output_dir;
    int synthetic_clips = -1;
    double synthetic_seconds = -1.0;
    std::int64_t seed = -1;
    int steps = -1;
    bool no_frames = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool seed_required) {
    cmd->add_option("--config", args.config_path, "JSON config file");
    cmd->add_option("--checkpoint", args.checkpoint, "model checkpoint path");
    cmd->add_option("--image", args.images, "input PNG file or directory");
    cmd->add_option("--audio", args.audio, "input WAV file or directory");
    cmd->add_option("--out", args.output_dir, "run output directory");
    cmd->add_option("--synthetic-clips", args.synthetic_clips,
                    "use the procedural corpus with this many clips");
    cmd->add_option("--synthetic-seconds", args.synthetic_seconds, "procedural clip length");
    cmd->add_option("--steps", args.steps, "DDIM steps for generation");
    cmd->add_flag("--no-frames", args.no_frames, "skip writing per-frame PNGs");
    auto* seed = cmd->add_option("--seed", args.seed, "master seed");
    if (seed_required && args.config_path.empty()) seed->required();
}

RunConfig build_config(const CommonArgs& args, const std::string& mode) {
    RunConfig cfg;
    if (!args.config_path.empty()) cfg = RunConfig::from_file(args.config_path);
    cfg.mode = mode;
    if (!args.checkpoint.empty()) cfg.checkpoint = args.checkpoint;
    if (!args.images.empty()) cfg.images = args.images;
    if (!args.audio.empty()) cfg.audio = args.audio;
    if (!args.output_dir.empty()) cfg.output_dir = args.output_dir;
    if (args.synthetic_clips >= 0) cfg.synthetic.clips = args.synthetic_clips;
    if (args.synthetic_seconds > 0) cfg.synthetic.seconds = args.synthetic_seconds;
    if (args.steps > 0) cfg.generation.steps = args.steps;
    if (args.seed >= 0) {
        cfg.seed = static_cast<std::uint64_t>(args.seed);
        cfg.seed_set = true;
    }
    if (args.no_frames) cfg.save_frames = false;
    return cfg;
}

void print_summary(const EvalReport& report) {
    std::printf("run %s: %zu record(s) -> %s/report.json\n", report.run_id.c_str(),
                report.records.size(), "");
    for (const auto& [name, mm] : report.aggregates())
        std::printf("  %-18s mean %10.6g   median %10.6g\n", name.c_str(), mm.first, mm.second);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"avshield: adversarial input protection for audio-driven portrait animation"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    CommonArgs train_args;
    int train_epochs = 60;
    int train_clips = 6;
    auto* train = app.add_subcommand("train-toy", "train the toy victim model on the procedural corpus");
    add_common(train, train_args, false);
    train->add_option("--epochs", train_epochs, "training epochs");
    train->add_option("--clips", train_clips, "corpus clips");

    CommonArgs protect_args;
    auto* protect = app.add_subcommand("protect", "optimize image and audio perturbations");
    add_common(protect, protect_args, true);
    double tau = -1, eta_p = -1, db_bound = 0, eta_a = -1;
    int iters = -1;
    protect->add_option("--tau", tau, "image L-inf budget");
    protect->add_option("--eta-image", eta_p, "image step size");
    protect->add_option("--db-bound", db_bound, "audio level bound (dB, negative)");
    protect->add_option("--eta-audio", eta_a, "audio step size");
    protect->add_option("--iters", iters, "attack iterations (both streams)");

    CommonArgs pi_args;
    auto* protect_image = app.add_subcommand("protect-image", "image stream only");
    add_common(protect_image, pi_args, true);

    CommonArgs pa_args;
    auto* protect_audio = app.add_subcommand("protect-audio", "audio stream only");
    add_common(protect_audio, pa_args, true);

    CommonArgs gen_args;
    auto* generate = app.add_subcommand("generate", "sample talking-head frames");
    add_common(generate, gen_args, false);

    CommonArgs purify_args;
    std::vector<std::string> purifier_kinds;
    auto* purify = app.add_subcommand("purify", "apply purification preprocessing");
    add_common(purify, purify_args, false);
    purify->add_option("--purifier", purifier_kinds,
                       "jpeg | resize | spectral_gate | spectral_subtract");

    CommonArgs eval_args;
    std::vector<std::string> prot_imgs, prot_auds;
    auto* evaluate = app.add_subcommand("evaluate", "metrics between clean and protected inputs");
    add_common(evaluate, eval_args, false);
    evaluate->add_option("--protected-image", prot_imgs, "protected PNG paired with --image");
    evaluate->add_option("--protected-audio", prot_auds, "protected WAV paired with --audio");

    CommonArgs ablate_args;
    std::string sweep = "intervals";
    auto* ablate = app.add_subcommand("ablate", "interval / layer / unit-interval sweeps");
    add_common(ablate, ablate_args, true);
    ablate->add_option("--sweep", sweep, "intervals | layers | unit_intervals");

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg;
        if (train->parsed()) {
            cfg = build_config(train_args, "train-toy");
            if (cfg.synthetic.clips == 0) cfg.synthetic.clips = train_clips;
            cfg.validate();
            EvalReport report = run_train_toy(cfg, cfg.synthetic.clips, train_epochs);
            const auto root = effective_output_dir(cfg);
            emit_report(report, root + "/report.json");
            print_summary(report);
            return 0;
        }
        if (protect->parsed()) {
            cfg = build_config(protect_args, "protect");
            if (tau > 0) cfg.image_attack.tau = tau;
            if (eta_p > 0) cfg.image_attack.eta = eta_p;
            if (db_bound < 0) cfg.audio_attack.db_bound = db_bound;
            if (eta_a > 0) cfg.audio_attack.eta = eta_a;
            if (iters >= 0) {
                cfg.image_attack.iters = iters;
                cfg.audio_attack.iters = iters;
            }
        } else if (protect_image->parsed()) {
            cfg = build_config(pi_args, "protect-image");
        } else if (protect_audio->parsed()) {
            cfg = build_config(pa_args, "protect-audio");
        } else if (generate->parsed()) {
            cfg = build_config(gen_args, "generate");
        } else if (purify->parsed()) {
            cfg = build_config(purify_args, "purify");
            for (const auto& kind : purifier_kinds) {
                PurifierSpec spec;
                spec.kind = kind;
                cfg.purifiers.push_back(spec);
            }
        } else if (evaluate->parsed()) {
            cfg = build_config(eval_args, "evaluate");
            if (!prot_imgs.empty()) cfg.protected_images = prot_imgs;
            if (!prot_auds.empty()) cfg.protected_audio = prot_auds;
        } else if (ablate->parsed()) {
            cfg = build_config(ablate_args, "ablate");
            cfg.ablation_sweep = sweep;
        }
        EvalReport report = execute_run(cfg);
        print_summary(report);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
