#pragma once

#include <map>
#include <vector>

#include "avshield/audio_attack.hpp"
#include "avshield/media.hpp"
#include "avshield/victim_model.hpp"

namespace avshield {

inline constexpr double kMetricCapDb = 100.0; // +inf sentinel for PSNR/SNR

// 10 log10(1 / MSE) with data range 1; identical inputs report the cap.
double psnr(const PortraitImage& a, const PortraitImage& b);
double psnr_frames(const FrameSequence& a, const FrameSequence& b); // frame-wise mean

// Standard single-scale SSIM on the channel-mean grayscale image: 11x11
// Gaussian window (sigma 1.5), K1 = 0.01, K2 = 0.03, data range 1, mean over
// fully-contained window positions.
double ssim(const PortraitImage& a, const PortraitImage& b);
double ssim_frames(const FrameSequence& a, const FrameSequence& b);

// 10 log10(sum clean^2 / sum (noisy - clean)^2); not symmetric.
double snr(const AudioClip& clean, const AudioClip& noisy);

// Pearson correlation between mouth-region mean intensity per frame and the
// audio RMS envelope; constant series report 0.
double sync_proxy(const FrameSequence& frames, const AudioClip& audio, const Rect& mouth_region);

double pearson(const std::vector<double>& a, const std::vector<double>& b);

// Per-unit spatial variance on a frozen (t, eps) grid; rows keyed by unit,
// columns by grid point.
struct AttentionVarianceReport {
    std::vector<int> t_grid;
    std::map<LayerBranchUnit, std::vector<double>> variance;
    double mean() const;
};

AttentionVarianceReport attention_variance_report(const VictimModel& model,
                                                  const PortraitImage& p_ref, const AudioClip& a,
                                                  const CafTargetPlan& plan,
                                                  const std::vector<int>& t_grid,
                                                  std::uint64_t eps_seed);

} // namespace avshield
