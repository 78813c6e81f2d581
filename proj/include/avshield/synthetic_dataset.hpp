#pragma once

#include <vector>

#include "avshield/media.hpp"
#include "avshield/rng.hpp"

namespace avshield {

// Seeded face layout for one synthetic clip. The mouth's vertical radius is
// an exact affine function of the per-frame audio RMS, which gives the
// corpus a recoverable ground-truth sync relation.
struct SyntheticClipParams {
    int image_size = 64;
    double face_cx, face_cy, face_rx, face_ry;
    double face_r, face_g, face_b;
    double bg_r, bg_g, bg_b;
    double mouth_cx, mouth_cy, mouth_rx;
    double mouth_r, mouth_g, mouth_b;
    double mouth_ry_min;   // radius at silence
    double mouth_ry_slope; // radius gain per unit RMS
};

struct SyntheticClip {
    SyntheticClipParams params;
    PortraitImage reference;        // neutral mouth (minimum opening)
    AudioClip audio;
    FrameSequence target_frames;
    Rect mouth_region;              // bounding box of the widest mouth
    std::vector<double> mouth_radius; // per frame, affine in rms
    std::vector<double> rms;          // per frame
};

SyntheticClipParams synthetic_params(int image_size, Rng& rng);

// Band-limited tone mixture with slow amplitude envelopes; peak <= 0.8.
AudioClip synthetic_audio(double seconds, Rng& rng);

// Renders reference, per-frame targets, and metadata for given audio.
SyntheticClip render_synthetic_clip(const SyntheticClipParams& params, AudioClip audio);

std::vector<SyntheticClip> make_synthetic_dataset(int n_clips, std::uint64_t seed,
                                                  int image_size = 64, double seconds = 0.8);

} // namespace avshield
