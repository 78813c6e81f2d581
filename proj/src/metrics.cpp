#include "avshield/metrics.hpp"

#include <cmath>

namespace avshield {

double psnr(const PortraitImage& a, const PortraitImage& b) {
    if (a.height != b.height || a.width != b.width) throw MetricError("psnr: shape mismatch");
    double mse = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        const double d = a.pixels[i] - b.pixels[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.pixels.size());
    if (mse == 0.0) return kMetricCapDb;
    return std::min(kMetricCapDb, 10.0 * std::log10(1.0 / mse));
}

double psnr_frames(const FrameSequence& a, const FrameSequence& b) {
    if (a.frames.size() != b.frames.size()) throw MetricError("psnr_frames: frame count mismatch");
    if (a.frames.empty()) throw MetricError("psnr_frames: empty sequences");
    double total = 0.0;
    for (std::size_t i = 0; i < a.frames.size(); ++i) total += psnr(a.frames[i], b.frames[i]);
    return total / static_cast<double>(a.frames.size());
}

namespace {

std::vector<double> grayscale(const PortraitImage& p) {
    std::vector<double> g(static_cast<std::size_t>(p.height) * p.width);
    for (int y = 0; y < p.height; ++y)
        for (int x = 0; x < p.width; ++x)
            g[static_cast<std::size_t>(y) * p.width + x] =
                (p.at(0, y, x) + p.at(1, y, x) + p.at(2, y, x)) / 3.0;
    return g;
}

const int kSsimWindow = 11;
const double kSsimSigma = 1.5;

const std::vector<double>& ssim_kernel() {
    static const std::vector<double> k = [] {
        std::vector<double> v(kSsimWindow * kSsimWindow);
        const int half = kSsimWindow / 2;
        double sum = 0.0;
        for (int y = 0; y < kSsimWindow; ++y)
            for (int x = 0; x < kSsimWindow; ++x) {
                const double dy = y - half, dx = x - half;
                v[y * kSsimWindow + x] = std::exp(-(dx * dx + dy * dy) / (2.0 * kSsimSigma * kSsimSigma));
                sum += v[y * kSsimWindow + x];
            }
        for (double& e : v) e /= sum;
        return v;
    }();
    return k;
}

} // namespace

double ssim(const PortraitImage& a, const PortraitImage& b) {
    if (a.height != b.height || a.width != b.width) throw MetricError("ssim: shape mismatch");
    if (a.height < kSsimWindow || a.width < kSsimWindow)
        throw MetricError("ssim: image smaller than the filter window");
    const std::vector<double> xa = grayscale(a), xb = grayscale(b);
    const std::vector<double>& k = ssim_kernel();
    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    const int oh = a.height - kSsimWindow + 1, ow = a.width - kSsimWindow + 1;
    double total = 0.0;
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double mx = 0.0, my = 0.0, xx = 0.0, yy = 0.0, xy = 0.0;
            for (int wy = 0; wy < kSsimWindow; ++wy)
                for (int wx = 0; wx < kSsimWindow; ++wx) {
                    const double w = k[wy * kSsimWindow + wx];
                    const double va = xa[static_cast<std::size_t>(y + wy) * a.width + x + wx];
                    const double vb = xb[static_cast<std::size_t>(y + wy) * a.width + x + wx];
                    mx += w * va;
                    my += w * vb;
                    xx += w * va * va;
                    yy += w * vb * vb;
                    xy += w * va * vb;
                }
            const double vx = xx - mx * mx;
            const double vy = yy - my * my;
            const double cov = xy - mx * my;
            total += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) /
                     ((mx * mx + my * my + c1) * (vx + vy + c2));
        }
    return total / (static_cast<double>(oh) * ow);
}

double ssim_frames(const FrameSequence& a, const FrameSequence& b) {
    if (a.frames.size() != b.frames.size()) throw MetricError("ssim_frames: frame count mismatch");
    if (a.frames.empty()) throw MetricError("ssim_frames: empty sequences");
    double total = 0.0;
    for (std::size_t i = 0; i < a.frames.size(); ++i) total += ssim(a.frames[i], b.frames[i]);
    return total / static_cast<double>(a.frames.size());
}

double snr(const AudioClip& clean, const AudioClip& noisy) {
    if (clean.samples.size() != noisy.samples.size()) throw MetricError("snr: length mismatch");
    double sig = 0.0, noise = 0.0;
    for (std::size_t i = 0; i < clean.samples.size(); ++i) {
        sig += clean.samples[i] * clean.samples[i];
        const double d = noisy.samples[i] - clean.samples[i];
        noise += d * d;
    }
    if (noise == 0.0) return kMetricCapDb;
    return std::min(kMetricCapDb, 10.0 * std::log10(sig / noise));
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.empty()) throw MetricError("pearson: length mismatch");
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double va = 0.0, vb = 0.0, cov = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        va += (a[i] - ma) * (a[i] - ma);
        vb += (b[i] - mb) * (b[i] - mb);
        cov += (a[i] - ma) * (b[i] - mb);
    }
    if (va == 0.0 || vb == 0.0) return 0.0; // degenerate constant series
    return cov / std::sqrt(va * vb);
}

double sync_proxy(const FrameSequence& frames, const AudioClip& audio, const Rect& mouth_region) {
    if (mouth_region.empty()) throw MetricError("sync_proxy: empty mouth region");
    const std::vector<double> rms = frame_rms(audio);
    if (frames.frames.size() != rms.size())
        throw MetricError("sync_proxy: frame count does not match audio frames");
    std::vector<double> intensity(frames.frames.size(), 0.0);
    for (std::size_t f = 0; f < frames.frames.size(); ++f) {
        const PortraitImage& img = frames.frames[f];
        if (mouth_region.y1 > img.height || mouth_region.x1 > img.width)
            throw MetricError("sync_proxy: region outside frame");
        double acc = 0.0;
        int count = 0;
        for (int y = mouth_region.y0; y < mouth_region.y1; ++y)
            for (int x = mouth_region.x0; x < mouth_region.x1; ++x) {
                acc += (img.at(0, y, x) + img.at(1, y, x) + img.at(2, y, x)) / 3.0;
                ++count;
            }
        intensity[f] = acc / count;
    }
    return pearson(intensity, rms);
}

double AttentionVarianceReport::mean() const {
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& [unit, vals] : variance) {
        for (double v : vals) total += v;
        count += vals.size();
    }
    return count == 0 ? 0.0 : total / static_cast<double>(count);
}

AttentionVarianceReport attention_variance_report(const VictimModel& model,
                                                  const PortraitImage& p_ref, const AudioClip& a,
                                                  const CafTargetPlan& plan,
                                                  const std::vector<int>& t_grid,
                                                  std::uint64_t eps_seed) {
    plan.validate(model.schedule().T);
    AttentionVarianceReport report;
    report.t_grid = t_grid;
    const std::set<LayerBranchUnit> units = plan.all_target_units();
    Tensor ref_latent = encode(p_ref);
    Tensor feats = audio_features(a, model.config().audio_bands);
    Rng rng(eps_seed);
    const int ls = model.config().latent_size();
    for (int t : t_grid) {
        Tensor eps = gaussian_like({3, ls, ls}, rng);
        Tensor z_t = forward_noise(ref_latent, t, eps, model.schedule());
        auto [eps_hat, maps] = model.denoise_predict(z_t, t, p_ref, feats, units);
        (void)eps_hat;
        for (const auto& u : units) report.variance[u].push_back(spatial_variance(maps.at(u)));
    }
    return report;
}

} // namespace avshield
