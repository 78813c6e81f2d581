#pragma once

#include <cmath>
#include <set>
#include <vector>

#include "avshield/media.hpp"
#include "avshield/rng.hpp"
#include "avshield/victim_model.hpp"

namespace avshield {

// Maps non-overlapping timestep intervals to the layer-branch units attacked
// when the sampled timestep falls in that interval.
struct CafTargetPlan {
    struct Entry {
        std::pair<int, int> interval; // [lo, hi]
        std::set<LayerBranchUnit> units;
    };
    std::vector<Entry> entries;

    void validate(int T) const;
    std::set<LayerBranchUnit> all_target_units() const;
};

CafTargetPlan default_caf_plan(int T = 1000);

struct AudioAttackConfig {
    double db_bound = -30.0;
    double eta = 0.0; // 0 = derive from the anchor: peak * 10^(bound/20) / 25
    int iters = 100;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(db_bound < 0.0)) throw ConfigError("audio attack: db_bound must be negative");
        if (eta < 0.0) throw ConfigError("audio attack: eta must be >= 0");
        if (iters < 0) throw ConfigError("audio attack: iters must be >= 0");
    }
    double effective_eta(double anchor_peak) const {
        return eta > 0.0 ? eta : anchor_peak * std::pow(10.0, db_bound / 20.0) / 25.0;
    }
};

struct AudioPerturbationState {
    AudioClip anchor;
    AudioClip current;
    int iteration = 0;
    std::vector<double> loss_trace;
};

// 20 log10 of peak absolute amplitude (the C&W convention; peak-based, unlike
// power-based SNR).
double db(const std::vector<double>& x);
// db(delta) - db(x); a zero-peak delta reports -inf (constraint trivially met).
double db_x(const std::vector<double>& delta, const std::vector<double>& x);

// Elementwise clamp |delta_i| <= peak(x) * 10^(bound/20); sign-preserving and
// idempotent.
std::vector<double> project_db(const std::vector<double>& delta, const std::vector<double>& x,
                               double bound);

// Mean over audio-token columns of the population variance across spatial
// queries. Row-stochastic maps have constant row sums, so the informative
// spread lives in the key columns.
double spatial_variance(const AttentionMap& map);

// One draw of the CAF objective: t ~ U(interval), Gaussian eps, noisy latent
// built from the clean reference, mean spatial variance over the tapped set.
double caf_loss(const VictimModel& model, const PortraitImage& p_ref, const AudioClip& a,
                std::pair<int, int> interval, const std::set<LayerBranchUnit>& units, Rng& rng);

struct AudioAttackResult {
    AudioClip protected_audio;
    std::vector<double> loss_trace;
};

// Per iteration: one plan entry at random, one timestep, sign-gradient step
// on the waveform, dB projection, [-1,1] clamp.
AudioAttackResult attack_audio(const VictimModel& model, const PortraitImage& p_ref,
                               const AudioClip& a0, const AudioAttackConfig& cfg,
                               const CafTargetPlan& plan);

// Mean spatial variance over every plan unit on a frozen (t, eps) grid with
// one timestep per interval (midpoint).
double caf_validation_variance(const VictimModel& model, const PortraitImage& p_ref,
                               const AudioClip& a, const CafTargetPlan& plan,
                               std::uint64_t eps_seed);

} // namespace avshield
