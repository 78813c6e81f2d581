#pragma once

#include <complex>
#include <vector>

#include "avshield/error.hpp"

namespace avshield {

// Radix-2 iterative FFT; n must be a power of two.
void fft_inplace(std::vector<std::complex<double>>& a, bool inverse);

// Centered STFT with a periodic Hann window. hop must divide the window and
// give at least 2x overlap so the squared-window overlap-add normalization
// reconstructs exactly.
struct Stft {
    int window = 512;
    int hop = 128;

    struct Frames {
        std::vector<std::vector<std::complex<double>>> spectra; // per frame, window bins
        int signal_len = 0;
    };

    Frames analyze(const std::vector<double>& x) const;
    std::vector<double> synthesize(const Frames& frames) const;
};

} // namespace avshield
