#include "avshield/purify.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <vector>

#include <jpeglib.h>

#include "avshield/stft.hpp"

namespace avshield {

void PurifierSpec::validate() const {
    if (kind == "jpeg") {
        if (jpeg_quality < 1 || jpeg_quality > 100)
            throw ConfigError("jpeg purifier: quality must be in [1,100]");
    } else if (kind == "resize") {
        if (!(resize_factor > 0.0) || !(resize_factor < 1.0))
            throw ConfigError("resize purifier: factor must be in (0,1)");
    } else if (kind == "spectral_gate") {
        if (gate_percentile < 0.0 || gate_percentile > 100.0)
            throw ConfigError("spectral gate: percentile must be in [0,100]");
        if (gate_attenuation < 0.0 || gate_attenuation > 1.0)
            throw ConfigError("spectral gate: attenuation must be in [0,1]");
    } else if (kind == "spectral_subtract") {
        if (subtract_over_factor < 0.0) throw ConfigError("spectral subtract: over factor < 0");
        if (subtract_floor < 0.0) throw ConfigError("spectral subtract: floor < 0");
    } else {
        throw ConfigError("unknown purifier kind: " + kind);
    }
}

std::string PurifierSpec::label() const {
    if (kind == "jpeg") return "jpeg_q" + std::to_string(jpeg_quality);
    if (kind == "resize") {
        char buf[32];
        std::snprintf(buf, sizeof buf, "resize_%.2f", resize_factor);
        return buf;
    }
    return kind;
}

namespace {

struct JpegErrorMgr {
    jpeg_error_mgr pub;
    std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* mgr = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
    std::longjmp(mgr->jump, 1);
}

} // namespace

PortraitImage jpeg_purify(const PortraitImage& p, int quality) {
    p.validate();
    if (quality < 1 || quality > 100) throw ConfigError("jpeg_purify: quality must be in [1,100]");

    // interleave to 8-bit RGB rows
    std::vector<unsigned char> rgb(static_cast<std::size_t>(p.height) * p.width * 3);
    for (int y = 0; y < p.height; ++y)
        for (int x = 0; x < p.width; ++x)
            for (int c = 0; c < 3; ++c)
                rgb[(static_cast<std::size_t>(y) * p.width + x) * 3 + c] = static_cast<unsigned char>(
                    std::lround(std::clamp(p.at(c, y, x), 0.0, 1.0) * 255.0));

    unsigned char* encoded = nullptr;
    unsigned long encoded_size = 0;
    {
        jpeg_compress_struct cinfo;
        JpegErrorMgr err;
        cinfo.err = jpeg_std_error(&err.pub);
        err.pub.error_exit = jpeg_error_exit;
        if (setjmp(err.jump)) {
            jpeg_destroy_compress(&cinfo);
            if (encoded) free(encoded);
            throw PurifyError("jpeg_purify: encode failed");
        }
        jpeg_create_compress(&cinfo);
        jpeg_mem_dest(&cinfo, &encoded, &encoded_size);
        cinfo.image_width = static_cast<JDIMENSION>(p.width);
        cinfo.image_height = static_cast<JDIMENSION>(p.height);
        cinfo.input_components = 3;
        cinfo.in_color_space = JCS_RGB;
        jpeg_set_defaults(&cinfo);
        jpeg_set_quality(&cinfo, quality, TRUE); // force baseline tables
        jpeg_start_compress(&cinfo, TRUE);
        while (cinfo.next_scanline < cinfo.image_height) {
            JSAMPROW row = rgb.data() + static_cast<std::size_t>(cinfo.next_scanline) * p.width * 3;
            jpeg_write_scanlines(&cinfo, &row, 1);
        }
        jpeg_finish_compress(&cinfo);
        jpeg_destroy_compress(&cinfo);
    }

    PortraitImage out;
    out.height = p.height;
    out.width = p.width;
    out.pixels.assign(p.pixels.size(), 0.0);
    {
        jpeg_decompress_struct dinfo;
        JpegErrorMgr err;
        dinfo.err = jpeg_std_error(&err.pub);
        err.pub.error_exit = jpeg_error_exit;
        if (setjmp(err.jump)) {
            jpeg_destroy_decompress(&dinfo);
            free(encoded);
            throw PurifyError("jpeg_purify: decode failed");
        }
        jpeg_create_decompress(&dinfo);
        jpeg_mem_src(&dinfo, encoded, encoded_size);
        jpeg_read_header(&dinfo, TRUE);
        dinfo.out_color_space = JCS_RGB;
        jpeg_start_decompress(&dinfo);
        std::vector<unsigned char> row(static_cast<std::size_t>(dinfo.output_width) * 3);
        int y = 0;
        while (dinfo.output_scanline < dinfo.output_height) {
            JSAMPROW rp = row.data();
            jpeg_read_scanlines(&dinfo, &rp, 1);
            for (int x = 0; x < p.width; ++x)
                for (int c = 0; c < 3; ++c)
                    out.at(c, y, x) = row[static_cast<std::size_t>(x) * 3 + c] / 255.0;
            ++y;
        }
        jpeg_finish_decompress(&dinfo);
        jpeg_destroy_decompress(&dinfo);
    }
    free(encoded);
    return out;
}

PortraitImage resize_bilinear(const PortraitImage& p, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) throw PurifyError("resize: degenerate target size");
    PortraitImage out;
    out.height = out_h;
    out.width = out_w;
    out.pixels.assign(static_cast<std::size_t>(3) * out_h * out_w, 0.0);
    const double sy = static_cast<double>(p.height) / out_h;
    const double sx = static_cast<double>(p.width) / out_w;
    for (int y = 0; y < out_h; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, p.height - 1.0);
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, p.height - 1);
        const double wy = fy - y0;
        for (int x = 0; x < out_w; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, p.width - 1.0);
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, p.width - 1);
            const double wx = fx - x0;
            for (int c = 0; c < 3; ++c) {
                const double top = (1.0 - wx) * p.at(c, y0, x0) + wx * p.at(c, y0, x1);
                const double bot = (1.0 - wx) * p.at(c, y1, x0) + wx * p.at(c, y1, x1);
                out.at(c, y, x) = (1.0 - wy) * top + wy * bot;
            }
        }
    }
    return out;
}

PortraitImage resize_purify(const PortraitImage& p, double factor) {
    p.validate();
    if (!(factor > 0.0) || !(factor < 1.0)) throw ConfigError("resize_purify: factor must be in (0,1)");
    const int h = static_cast<int>(std::lround(p.height * factor));
    const int w = static_cast<int>(std::lround(p.width * factor));
    if (h < 1 || w < 1) throw PurifyError("resize_purify: degenerate target size");
    return resize_bilinear(resize_bilinear(p, h, w), p.height, p.width);
}

namespace {

double percentile(std::vector<double> v, double pct) {
    std::sort(v.begin(), v.end());
    if (v.size() == 1) return v[0];
    const double pos = pct / 100.0 * (static_cast<double>(v.size()) - 1.0);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[hi] * frac;
}

AudioClip clamp_clip(std::vector<double> samples) {
    AudioClip out;
    for (double& v : samples) v = std::clamp(v, -1.0, 1.0);
    out.samples = std::move(samples);
    return out;
}

} // namespace

AudioClip spectral_gate(const AudioClip& a, const PurifierSpec& spec) {
    a.validate();
    Stft stft{spec.stft_window, spec.stft_hop};
    Stft::Frames frames = stft.analyze(a.samples);
    const int bins = spec.stft_window;
    const std::size_t n_frames = frames.spectra.size();

    for (int k = 0; k < bins; ++k) {
        std::vector<double> mags(n_frames);
        for (std::size_t f = 0; f < n_frames; ++f) mags[f] = std::abs(frames.spectra[f][k]);
        const double floor_k = percentile(mags, spec.gate_percentile);
        for (std::size_t f = 0; f < n_frames; ++f)
            if (std::abs(frames.spectra[f][k]) < floor_k)
                frames.spectra[f][k] *= spec.gate_attenuation;
    }
    return clamp_clip(stft.synthesize(frames));
}

AudioClip spectral_subtract(const AudioClip& a, const PurifierSpec& spec) {
    a.validate();
    Stft stft{spec.stft_window, spec.stft_hop};
    Stft::Frames frames = stft.analyze(a.samples);
    const int bins = spec.stft_window;
    const std::size_t n_frames = frames.spectra.size();

    // noise spectrum from the lowest-energy 10% of frames (at least one)
    std::vector<std::pair<double, std::size_t>> energy(n_frames);
    for (std::size_t f = 0; f < n_frames; ++f) {
        double e = 0.0;
        for (int k = 0; k < bins; ++k) e += std::norm(frames.spectra[f][k]);
        energy[f] = {e, f};
    }
    std::sort(energy.begin(), energy.end());
    const std::size_t n_noise = std::max<std::size_t>(1, n_frames / 10);
    std::vector<double> noise(bins, 0.0);
    for (std::size_t i = 0; i < n_noise; ++i)
        for (int k = 0; k < bins; ++k) noise[k] += std::abs(frames.spectra[energy[i].second][k]);
    for (int k = 0; k < bins; ++k) noise[k] /= static_cast<double>(n_noise);

    for (std::size_t f = 0; f < n_frames; ++f)
        for (int k = 0; k < bins; ++k) {
            const double mag = std::abs(frames.spectra[f][k]);
            const double target =
                std::max(mag - spec.subtract_over_factor * noise[k], spec.subtract_floor * noise[k]);
            if (mag > 0.0)
                frames.spectra[f][k] *= target / mag;
            else
                frames.spectra[f][k] = {target, 0.0};
        }
    return clamp_clip(stft.synthesize(frames));
}

PortraitImage purify_image(const PortraitImage& p, const PurifierSpec& spec) {
    spec.validate();
    if (spec.kind == "jpeg") return jpeg_purify(p, spec.jpeg_quality);
    if (spec.kind == "resize") return resize_purify(p, spec.resize_factor);
    throw ConfigError("purify_image: not an image purifier: " + spec.kind);
}

AudioClip purify_audio(const AudioClip& a, const PurifierSpec& spec) {
    spec.validate();
    if (spec.kind == "spectral_gate") return spectral_gate(a, spec);
    if (spec.kind == "spectral_subtract") return spectral_subtract(a, spec);
    throw ConfigError("purify_audio: not an audio purifier: " + spec.kind);
}

} // namespace avshield
