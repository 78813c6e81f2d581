#include "avshield/stft.hpp"

#include <cmath>

namespace avshield {

void fft_inplace(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    if (n == 0 || (n & (n - 1)) != 0) throw InputError("fft: size must be a power of two");
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = 2.0 * M_PI / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t j = 0; j < len / 2; ++j) {
                const std::complex<double> u = a[i + j];
                const std::complex<double> v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wl;
            }
        }
    }
    if (inverse)
        for (auto& v : a) v /= static_cast<double>(n);
}

namespace {

std::vector<double> hann_periodic(int n) {
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) w[i] = 0.5 * (1.0 - std::cos(2.0 * M_PI * i / n));
    return w;
}

} // namespace

Stft::Frames Stft::analyze(const std::vector<double>& x) const {
    if (window <= 0 || (window & (window - 1)) != 0) throw ConfigError("stft: window must be a power of two");
    if (hop <= 0 || window % hop != 0 || hop > window / 2)
        throw ConfigError("stft: hop must divide the window with >= 2x overlap");
    if (static_cast<int>(x.size()) < window) throw PurifyError("stft: clip shorter than one window");

    const std::vector<double> win = hann_periodic(window);
    const int pad = window / 2;
    const int padded = static_cast<int>(x.size()) + 2 * pad;
    const int n_frames = (padded - window) / hop + 1;

    Frames out;
    out.signal_len = static_cast<int>(x.size());
    out.spectra.reserve(n_frames);
    std::vector<std::complex<double>> buf(window);
    for (int f = 0; f < n_frames; ++f) {
        const int start = f * hop - pad;
        for (int i = 0; i < window; ++i) {
            const int src = start + i;
            const double v = (src >= 0 && src < static_cast<int>(x.size())) ? x[src] : 0.0;
            buf[i] = {v * win[i], 0.0};
        }
        fft_inplace(buf, false);
        out.spectra.push_back(buf);
    }
    return out;
}

std::vector<double> Stft::synthesize(const Frames& frames) const {
    const std::vector<double> win = hann_periodic(window);
    const int pad = window / 2;
    const int padded = frames.signal_len + 2 * pad;
    std::vector<double> acc(padded, 0.0), norm(padded, 0.0);
    std::vector<std::complex<double>> buf(window);
    for (std::size_t f = 0; f < frames.spectra.size(); ++f) {
        buf = frames.spectra[f];
        fft_inplace(buf, true);
        const int start = static_cast<int>(f) * hop;
        for (int i = 0; i < window; ++i) {
            const int dst = start + i;
            if (dst < 0 || dst >= padded) continue;
            acc[dst] += buf[i].real() * win[i];
            norm[dst] += win[i] * win[i];
        }
    }
    std::vector<double> y(frames.signal_len, 0.0);
    for (int i = 0; i < frames.signal_len; ++i) {
        const double n = norm[i + pad];
        y[i] = n > 1e-12 ? acc[i + pad] / n : 0.0;
    }
    return y;
}

} // namespace avshield
