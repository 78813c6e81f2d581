#pragma once

#include <string>

#include "avshield/media.hpp"

namespace avshield {

// Purifier kinds and per-kind parameters with desk-scale defaults.
struct PurifierSpec {
    std::string kind; // jpeg | resize | spectral_gate | spectral_subtract
    int jpeg_quality = 75;
    double resize_factor = 0.5;
    int stft_window = 512;
    int stft_hop = 128;
    double gate_percentile = 20.0; // noise floor percentile per frequency
    double gate_attenuation = 0.1; // scale for bins under the floor
    double subtract_over_factor = 1.0;
    double subtract_floor = 0.02; // spectral floor beta

    bool is_image() const { return kind == "jpeg" || kind == "resize"; }
    bool is_audio() const { return kind == "spectral_gate" || kind == "spectral_subtract"; }
    void validate() const;
    std::string label() const;
};

// Baseline JPEG encode/decode round trip at the given quality.
PortraitImage jpeg_purify(const PortraitImage& p, int quality);

// Bilinear downscale by factor then bilinear upscale back to size.
PortraitImage resize_purify(const PortraitImage& p, double factor);

AudioClip spectral_gate(const AudioClip& a, const PurifierSpec& spec);
AudioClip spectral_subtract(const AudioClip& a, const PurifierSpec& spec);

PortraitImage purify_image(const PortraitImage& p, const PurifierSpec& spec);
AudioClip purify_audio(const AudioClip& a, const PurifierSpec& spec);

// Bilinear resampling helper shared with ingest.
PortraitImage resize_bilinear(const PortraitImage& p, int out_h, int out_w);

} // namespace avshield
