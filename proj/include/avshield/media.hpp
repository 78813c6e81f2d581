#pragma once

#include <cmath>
#include <vector>

#include "avshield/error.hpp"
#include "avshield/tensor.hpp"

namespace avshield {

inline constexpr int kSampleRate = 16000;
inline constexpr int kFps = 25;
inline constexpr int kSamplesPerFrame = kSampleRate / kFps; // 640

// RGB image, channel-major (3,H,W), values in [0,1].
struct PortraitImage {
    int height = 0;
    int width = 0;
    std::vector<double> pixels; // size 3*H*W

    double& at(int c, int y, int x) {
        return pixels[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    double at(int c, int y, int x) const {
        return pixels[(static_cast<std::size_t>(c) * height + y) * width + x];
    }

    Tensor as_tensor() const { return Tensor::from({3, height, width}, pixels); }

    static PortraitImage from_tensor(const Tensor& t) {
        if (t.ndim() != 3 || t.dim(0) != 3) throw InputError("image tensor must be (3,H,W)");
        PortraitImage img;
        img.height = t.dim(1);
        img.width = t.dim(2);
        img.pixels.assign(t.data(), t.data() + t.size());
        return img;
    }

    void validate() const {
        if (height <= 0 || width <= 0 || pixels.size() != static_cast<std::size_t>(3) * height * width)
            throw InputError("portrait image: bad dimensions");
        for (double v : pixels)
            if (!std::isfinite(v) || v < 0.0 || v > 1.0)
                throw InputError("portrait image: values must be finite and in [0,1]");
    }
};

// Mono audio, samples in [-1,1] at 16 kHz.
struct AudioClip {
    std::vector<double> samples;
    int sample_rate = kSampleRate;

    double duration_seconds() const {
        return static_cast<double>(samples.size()) / sample_rate;
    }

    int frame_count() const {
        // one row per 40 ms video frame, trailing partial frame included
        return static_cast<int>((samples.size() + kSamplesPerFrame - 1) / kSamplesPerFrame);
    }

    void validate() const {
        if (samples.empty()) throw InputError("audio clip: empty");
        if (sample_rate != kSampleRate) throw InputError("audio clip: expected 16 kHz");
        for (double v : samples)
            if (!std::isfinite(v) || v < -1.0 || v > 1.0)
                throw InputError("audio clip: samples must be finite and in [-1,1]");
    }
};

struct FrameSequence {
    std::vector<PortraitImage> frames;
    int fps = kFps;
};

struct Rect {
    int y0 = 0, x0 = 0, y1 = 0, x1 = 0; // half-open [y0,y1) x [x0,x1)
    bool empty() const { return y1 <= y0 || x1 <= x0; }
};

// Per-frame RMS envelope over 40 ms windows (plain RMS, not log).
inline std::vector<double> frame_rms(const AudioClip& a) {
    const int f = a.frame_count();
    std::vector<double> rms(f, 0.0);
    for (int i = 0; i < f; ++i) {
        double acc = 0.0;
        for (int j = 0; j < kSamplesPerFrame; ++j) {
            std::size_t idx = static_cast<std::size_t>(i) * kSamplesPerFrame + j;
            if (idx < a.samples.size()) acc += a.samples[idx] * a.samples[idx];
        }
        rms[i] = std::sqrt(acc / kSamplesPerFrame);
    }
    return rms;
}

} // namespace avshield
