#pragma once

#include "avshield/media.hpp"
#include "avshield/victim_model.hpp"

namespace avshield {

// Deterministic DDIM-style generation: one independent reverse trajectory
// per video frame, conditioned on the reference latent and that frame's
// audio feature window. Decoding is nearest-neighbor 2x upsampling.
FrameSequence sample_frames(const VictimModel& model, const PortraitImage& p_ref,
                            const AudioClip& audio, int steps, std::uint64_t seed);

// Single-latent variant used internally and by tests.
Tensor sample_latent(const VictimModel& model, const Tensor& ref_latent,
                     const Tensor& frame_tokens, int steps, Rng& rng);

} // namespace avshield
