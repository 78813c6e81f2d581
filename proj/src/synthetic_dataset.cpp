#include "avshield/synthetic_dataset.hpp"

#include <cmath>

namespace avshield {

namespace {

// soft-edged ellipse coverage: 1 inside, 0 outside, ~1 px transition
double ellipse_mask(double x, double y, double cx, double cy, double rx, double ry) {
    const double dx = (x - cx) / rx, dy = (y - cy) / ry;
    const double d = std::sqrt(dx * dx + dy * dy);
    const double edge = 1.0 / std::min(rx, ry); // about one pixel in normalized units
    if (d <= 1.0 - edge) return 1.0;
    if (d >= 1.0 + edge) return 0.0;
    const double s = (d - (1.0 - edge)) / (2.0 * edge);
    return 1.0 - s * s * (3.0 - 2.0 * s); // smoothstep falloff
}

void paint_ellipse(PortraitImage& img, double cx, double cy, double rx, double ry,
                   double r, double g, double b) {
    const int y0 = std::max(0, static_cast<int>(std::floor(cy - ry - 2)));
    const int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(cy + ry + 2)));
    const int x0 = std::max(0, static_cast<int>(std::floor(cx - rx - 2)));
    const int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(cx + rx + 2)));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const double m = ellipse_mask(x + 0.5, y + 0.5, cx, cy, rx, ry);
            if (m <= 0.0) continue;
            img.at(0, y, x) = (1.0 - m) * img.at(0, y, x) + m * r;
            img.at(1, y, x) = (1.0 - m) * img.at(1, y, x) + m * g;
            img.at(2, y, x) = (1.0 - m) * img.at(2, y, x) + m * b;
        }
}

PortraitImage render_face(const SyntheticClipParams& p, double mouth_ry) {
    PortraitImage img;
    img.height = img.width = p.image_size;
    img.pixels.assign(static_cast<std::size_t>(3) * p.image_size * p.image_size, 0.0);
    for (int y = 0; y < p.image_size; ++y)
        for (int x = 0; x < p.image_size; ++x) {
            img.at(0, y, x) = p.bg_r;
            img.at(1, y, x) = p.bg_g;
            img.at(2, y, x) = p.bg_b;
        }
    paint_ellipse(img, p.face_cx, p.face_cy, p.face_rx, p.face_ry, p.face_r, p.face_g, p.face_b);
    paint_ellipse(img, p.mouth_cx, p.mouth_cy, p.mouth_rx, mouth_ry, p.mouth_r, p.mouth_g,
                  p.mouth_b);
    return img;
}

} // namespace

SyntheticClipParams synthetic_params(int image_size, Rng& rng) {
    const double s = image_size / 64.0;
    SyntheticClipParams p;
    p.image_size = image_size;
    p.face_cx = image_size / 2.0 + rng.uniform(-2.0, 2.0) * s;
    p.face_cy = image_size * 0.47 + rng.uniform(-2.0, 2.0) * s;
    p.face_rx = (20.0 + rng.uniform(-2.0, 2.0)) * s;
    p.face_ry = (24.0 + rng.uniform(-2.0, 2.0)) * s;
    p.face_r = rng.uniform(0.35, 0.55);
    p.face_g = rng.uniform(0.25, 0.45);
    p.face_b = rng.uniform(0.20, 0.40);
    p.bg_r = rng.uniform(0.05, 0.15);
    p.bg_g = rng.uniform(0.05, 0.15);
    p.bg_b = rng.uniform(0.10, 0.25);
    p.mouth_cx = p.face_cx + rng.uniform(-1.0, 1.0) * s;
    p.mouth_cy = image_size * 0.70 + rng.uniform(-1.5, 1.5) * s;
    p.mouth_rx = (8.0 + rng.uniform(-1.0, 1.0)) * s;
    p.mouth_r = rng.uniform(0.85, 0.95);
    p.mouth_g = rng.uniform(0.75, 0.90);
    p.mouth_b = rng.uniform(0.70, 0.85);
    p.mouth_ry_min = 1.5 * s;
    p.mouth_ry_slope = 14.0 * s;
    return p;
}

AudioClip synthetic_audio(double seconds, Rng& rng) {
    AudioClip clip;
    const int n = static_cast<int>(std::lround(seconds * kSampleRate));
    clip.samples.assign(n, 0.0);
    const int n_tones = static_cast<int>(rng.uniform_int(2, 3));
    double peak_budget = 0.8 / n_tones;
    for (int k = 0; k < n_tones; ++k) {
        const double freq = rng.uniform(200.0, 3000.0);
        const double amp = peak_budget * rng.uniform(0.5, 1.0);
        const double env_freq = rng.uniform(0.8, 2.5); // slow envelope, Hz
        const double env_phase = rng.uniform(0.0, 2.0 * M_PI);
        const double phase = rng.uniform(0.0, 2.0 * M_PI);
        for (int i = 0; i < n; ++i) {
            const double t = static_cast<double>(i) / kSampleRate;
            const double env = 0.5 * (1.0 - std::cos(2.0 * M_PI * env_freq * t + env_phase));
            clip.samples[i] += amp * env * std::sin(2.0 * M_PI * freq * t + phase);
        }
    }
    return clip;
}

SyntheticClip render_synthetic_clip(const SyntheticClipParams& params, AudioClip audio) {
    SyntheticClip clip;
    clip.params = params;
    clip.audio = std::move(audio);
    clip.rms = frame_rms(clip.audio);
    clip.reference = render_face(params, params.mouth_ry_min);
    clip.mouth_radius.reserve(clip.rms.size());
    double max_ry = params.mouth_ry_min;
    for (double r : clip.rms) {
        const double ry = params.mouth_ry_min + params.mouth_ry_slope * r;
        clip.mouth_radius.push_back(ry);
        max_ry = std::max(max_ry, ry);
        clip.target_frames.frames.push_back(render_face(params, ry));
    }
    clip.mouth_region.y0 = std::max(0, static_cast<int>(std::floor(params.mouth_cy - max_ry - 1)));
    clip.mouth_region.y1 =
        std::min(params.image_size, static_cast<int>(std::ceil(params.mouth_cy + max_ry + 1)));
    clip.mouth_region.x0 = std::max(0, static_cast<int>(std::floor(params.mouth_cx - params.mouth_rx - 1)));
    clip.mouth_region.x1 =
        std::min(params.image_size, static_cast<int>(std::ceil(params.mouth_cx + params.mouth_rx + 1)));
    return clip;
}

std::vector<SyntheticClip> make_synthetic_dataset(int n_clips, std::uint64_t seed, int image_size,
                                                  double seconds) {
    if (n_clips < 1) throw ConfigError("synthetic dataset: n_clips must be >= 1");
    std::vector<SyntheticClip> clips;
    clips.reserve(n_clips);
    Rng root(seed);
    for (int i = 0; i < n_clips; ++i) {
        Rng face_rng = root.derive(Rng::mix(0x66616365, i)); // per-clip streams
        Rng audio_rng = root.derive(Rng::mix(0x61756469, i));
        SyntheticClipParams p = synthetic_params(image_size, face_rng);
        clips.push_back(render_synthetic_clip(p, synthetic_audio(seconds, audio_rng)));
    }
    return clips;
}

} // namespace avshield
