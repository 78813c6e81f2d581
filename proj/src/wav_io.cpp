#include "avshield/wav_io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace avshield {

namespace {

std::uint32_t read_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void write_u32(std::ofstream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<char*>(b), 4);
}

void write_u16(std::ofstream& out, std::uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
    out.write(reinterpret_cast<char*>(b), 2);
}

} // namespace

std::vector<double> resample(const std::vector<double>& x, int src_rate, int dst_rate) {
    if (src_rate == dst_rate) return x;
    if (src_rate <= 0 || dst_rate <= 0) throw InputError("resample: bad rates");
    const double ratio = static_cast<double>(src_rate) / dst_rate;
    const std::size_t out_len =
        static_cast<std::size_t>(std::llround(static_cast<double>(x.size()) * dst_rate / src_rate));
    std::vector<double> y(out_len, 0.0);
    const double cutoff = std::min(1.0, 1.0 / ratio); // relative to source Nyquist
    const double half_span = 32.0 * std::max(1.0, ratio);
    for (std::size_t i = 0; i < out_len; ++i) {
        const double center = static_cast<double>(i) * ratio;
        const int lo = static_cast<int>(std::ceil(center - half_span));
        const int hi = static_cast<int>(std::floor(center + half_span));
        double acc = 0.0, wsum = 0.0;
        for (int n = lo; n <= hi; ++n) {
            const double d = (static_cast<double>(n) - center) * cutoff;
            const double s = d == 0.0 ? 1.0 : std::sin(M_PI * d) / (M_PI * d);
            const double u = (static_cast<double>(n) - center) / half_span;
            const double w = 0.5 * (1.0 + std::cos(M_PI * u)); // Hann taper
            acc += s * w * (n >= 0 && n < static_cast<int>(x.size()) ? x[n] : 0.0);
            wsum += s * w;
        }
        // normalized so constant signals stay constant
        y[i] = wsum != 0.0 ? acc / wsum : 0.0;
    }
    return y;
}

AudioClip load_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open WAV: " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        throw IoError("not a RIFF/WAVE file: " + path);

    int channels = 0, bits = 0, rate = 0, format = 0;
    std::size_t data_off = 0, data_len = 0;
    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const std::uint32_t chunk_len = read_u32(bytes.data() + pos + 4);
        const unsigned char* tag = bytes.data() + pos;
        if (std::memcmp(tag, "fmt ", 4) == 0 && pos + 8 + 16 <= bytes.size()) {
            const unsigned char* f = bytes.data() + pos + 8;
            format = read_u16(f);
            channels = read_u16(f + 2);
            rate = static_cast<int>(read_u32(f + 4));
            bits = read_u16(f + 14);
        } else if (std::memcmp(tag, "data", 4) == 0) {
            data_off = pos + 8;
            data_len = std::min<std::size_t>(chunk_len, bytes.size() - data_off);
        }
        pos += 8 + chunk_len + (chunk_len & 1);
    }
    if (channels <= 0 || rate <= 0 || data_off == 0) throw IoError("malformed WAV: " + path);

    const int bytes_per = bits / 8;
    if (bytes_per <= 0) throw IoError("WAV: bad bit depth");
    const std::size_t n_frames = data_len / (static_cast<std::size_t>(bytes_per) * channels);
    std::vector<double> mono(n_frames, 0.0);
    for (std::size_t i = 0; i < n_frames; ++i) {
        double acc = 0.0;
        for (int c = 0; c < channels; ++c) {
            const unsigned char* s = bytes.data() + data_off +
                                     (i * channels + c) * static_cast<std::size_t>(bytes_per);
            double v = 0.0;
            if (format == 1) { // PCM
                if (bits == 8) {
                    v = (static_cast<int>(s[0]) - 128) / 128.0;
                } else if (bits == 16) {
                    v = static_cast<std::int16_t>(s[0] | (s[1] << 8)) / 32768.0;
                } else if (bits == 24) {
                    std::int32_t raw = s[0] | (s[1] << 8) | (s[2] << 16);
                    if (raw & 0x800000) raw |= ~0xFFFFFF;
                    v = raw / 8388608.0;
                } else if (bits == 32) {
                    std::int32_t raw;
                    std::memcpy(&raw, s, 4);
                    v = raw / 2147483648.0;
                } else {
                    throw IoError("WAV: unsupported PCM depth " + std::to_string(bits));
                }
            } else if (format == 3) { // IEEE float
                if (bits == 32) {
                    float raw;
                    std::memcpy(&raw, s, 4);
                    v = raw;
                } else if (bits == 64) {
                    double raw;
                    std::memcpy(&raw, s, 8);
                    v = raw;
                } else {
                    throw IoError("WAV: unsupported float depth " + std::to_string(bits));
                }
            } else {
                throw IoError("WAV: unsupported format tag " + std::to_string(format));
            }
            acc += v;
        }
        mono[i] = acc / channels;
    }

    AudioClip clip;
    clip.samples = rate == kSampleRate ? std::move(mono) : resample(mono, rate, kSampleRate);
    for (double& v : clip.samples) v = std::clamp(v, -1.0, 1.0);
    if (clip.samples.empty()) throw IoError("WAV: no samples: " + path);
    return clip;
}

void save_wav(const AudioClip& clip, const std::string& path) {
    clip.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write WAV: " + path);
    const std::uint32_t n = static_cast<std::uint32_t>(clip.samples.size());
    const std::uint32_t data_bytes = n * 4;
    out.write("RIFF", 4);
    write_u32(out, 36 + data_bytes);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    write_u32(out, 16);
    write_u16(out, 3); // IEEE float
    write_u16(out, 1);
    write_u32(out, kSampleRate);
    write_u32(out, kSampleRate * 4);
    write_u16(out, 4);
    write_u16(out, 32);
    out.write("data", 4);
    write_u32(out, data_bytes);
    for (double v : clip.samples) {
        const float f = static_cast<float>(v);
        out.write(reinterpret_cast<const char*>(&f), 4);
    }
}

} // namespace avshield
