#pragma once

#include <string>

#include "avshield/media.hpp"

namespace avshield {

// Reads PCM 8/16/24/32 or IEEE float 32/64 WAV; channels are averaged to
// mono and the clip is resampled to 16 kHz when needed.
AudioClip load_wav(const std::string& path);

// 32-bit float mono, lossless with respect to float precision.
void save_wav(const AudioClip& clip, const std::string& path);

// Windowed-sinc rate conversion (Hann, 32 taps per side at the lower rate).
std::vector<double> resample(const std::vector<double>& x, int src_rate, int dst_rate);

} // namespace avshield
