#pragma once

#include <vector>

#include "avshield/synthetic_dataset.hpp"
#include "avshield/victim_model.hpp"

namespace avshield {

struct TrainConfig {
    int epochs = 60;
    int batch_size = 4;
    double lr = 3e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
};

struct TrainResult {
    std::vector<double> epoch_loss;  // mean per-element noise-prediction MSE
    double initial_val_loss = 0.0;   // frozen validation grid, before training
    double final_val_loss = 0.0;
};

// Standard noise-prediction training on the synthetic corpus: noise a target
// frame's latent at a random step and regress the injected noise, conditioned
// on the clip's reference latent and the frame's audio feature window.
// Deterministic given (model seed, corpus, seed).
TrainResult train_toy(VictimModel& model, const std::vector<SyntheticClip>& corpus,
                      const TrainConfig& cfg, std::uint64_t seed);

// Mean per-element MSE over a frozen (t, eps) grid drawn from val_seed.
double validation_loss(const VictimModel& model, const std::vector<SyntheticClip>& corpus,
                       std::uint64_t val_seed, int n_points = 32);

} // namespace avshield
