#pragma once

#include <utility>
#include <vector>

#include "avshield/media.hpp"
#include "avshield/rng.hpp"
#include "avshield/victim_model.hpp"

namespace avshield {

// Closed timestep ranges with per-interval aggregation weights.
struct IntervalPlan {
    std::vector<std::pair<int, int>> intervals; // [lo, hi], 1-based steps
    std::vector<double> weights;

    void validate(int T) const;
};

// Four denoising-stage intervals; [0,100] clamps to [1,100] since step 0 is
// not a valid noising step. Weights default to uniform.
IntervalPlan default_interval_plan(int T = 1000);

struct ImageAttackConfig {
    double tau = 16.0 / 255.0;  // L-inf budget
    double eta = 1.0 / 255.0;   // step size
    int iters = 100;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(tau > 0.0) || tau > 1.0) throw ConfigError("image attack: tau must be in (0,1]");
        if (!(eta > 0.0) || eta > tau) throw ConfigError("image attack: need 0 < eta <= tau");
        if (iters < 0) throw ConfigError("image attack: iters must be >= 0");
    }
};

struct ImagePerturbationState {
    PortraitImage anchor;
    PortraitImage current;
    int iteration = 0;
    std::vector<double> loss_trace;
};

// ||eps - eps_theta(z_t, t, P, A)||^2, summed over elements. The portrait
// enters twice: as the noised latent's source and as the reference condition.
double nullifying_loss(const VictimModel& model, const PortraitImage& p, const AudioClip& a,
                       int t, const Tensor& eps);

// Weighted sum over the plan: one (t_k, eps_k) draw per interval, in interval
// order (t first, then the noise elements).
double mis_loss(const VictimModel& model, const PortraitImage& p, const AudioClip& a,
                const IntervalPlan& plan, Rng& rng);

// One projected sign-gradient step; the ball projection composes with the
// [0,1] pixel clamp. sign(0) = 0.
ImagePerturbationState pgd_image_step(const ImagePerturbationState& state, const Tensor& grad,
                                      const ImageAttackConfig& cfg);

struct ImageAttackResult {
    PortraitImage protected_image;
    std::vector<double> loss_trace;
};

ImageAttackResult attack_image(const VictimModel& model, const PortraitImage& p0,
                               const AudioClip& a, const ImageAttackConfig& cfg,
                               const IntervalPlan& plan);

// Frozen-grid validation loss: mean nullifying loss over fixed (t, eps)
// points so before/after comparisons are sampling-noise free.
double nullifying_validation_loss(const VictimModel& model, const PortraitImage& p,
                                  const AudioClip& a, const std::vector<int>& t_grid,
                                  std::uint64_t eps_seed);

} // namespace avshield
