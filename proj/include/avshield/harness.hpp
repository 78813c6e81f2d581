#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "avshield/audio_attack.hpp"
#include "avshield/image_attack.hpp"
#include "avshield/media.hpp"
#include "avshield/purify.hpp"
#include "avshield/report.hpp"
#include "avshield/victim_model.hpp"

namespace avshield {

struct SyntheticInputs {
    int clips = 0; // > 0 selects the procedural corpus
    double seconds = 0.8;
};

struct GenerationConfig {
    int steps = 10;
};

struct RunConfig {
    std::string mode; // train-toy|protect-image|protect-audio|protect|generate|purify|evaluate|ablate
    std::string checkpoint;
    std::vector<std::string> images; // files or directories of PNGs
    std::vector<std::string> audio;  // files or directories of WAVs
    std::vector<std::string> protected_images; // evaluate mode pairs
    std::vector<std::string> protected_audio;
    SyntheticInputs synthetic;
    ImageAttackConfig image_attack;
    AudioAttackConfig audio_attack;
    IntervalPlan interval_plan = default_interval_plan();
    CafTargetPlan caf_plan = default_caf_plan();
    std::vector<PurifierSpec> purifiers;
    GenerationConfig generation;
    std::optional<Rect> mouth_region;
    std::string ablation_sweep = "intervals"; // intervals|layers|unit_intervals
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string output_dir = "runs/out";
    bool save_frames = true;

    // Unknown keys anywhere in the document are configuration errors.
    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig from_file(const std::string& path);
    nlohmann::ordered_json to_json() const; // canonical form used for the digest
    std::string digest() const;
    void validate() const;
};

struct WorkItem {
    std::string name;
    std::string portrait_id;
    std::string audio_id;
    PortraitImage portrait;
    AudioClip clip;
    Rect mouth;
};

struct IngestResult {
    std::vector<WorkItem> items;
    std::vector<std::string> warnings; // per-item failures, run continues
};

// Loads and validates inputs. PNG images are resized to the model size,
// audio resampled to 16 kHz; ids are content hashes of the source bytes.
IngestResult ingest(const RunConfig& cfg, int image_size);

EvalReport run_protect(const RunConfig& cfg);
EvalReport run_purification_matrix(const RunConfig& cfg);
EvalReport run_ablation(const RunConfig& cfg);
EvalReport run_generate(const RunConfig& cfg);
EvalReport run_purify(const RunConfig& cfg);
EvalReport run_evaluate(const RunConfig& cfg);
EvalReport run_train_toy(const RunConfig& cfg, int clips, int epochs);

// Dispatch on cfg.mode; writes config.json, report.json, and artifacts under
// the run directory (AVSHIELD_OUT_DIR overrides cfg.output_dir).
EvalReport execute_run(const RunConfig& cfg);

std::string effective_output_dir(const RunConfig& cfg);

// Default mouth rectangle for user-supplied portraits: lower-center box.
Rect default_mouth_region(int image_size);

} // namespace avshield
