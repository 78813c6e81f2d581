#include "avshield/sampler.hpp"

#include <cmath>

#include "avshield/parallel.hpp"

namespace avshield {

using ag::NodePtr;

Tensor sample_latent(const VictimModel& model, const Tensor& ref_latent,
                     const Tensor& frame_tokens, int steps, Rng& rng) {
    if (steps < 1) throw ConfigError("sampler: steps must be >= 1");
    const auto& sched = model.schedule();
    const int T = sched.T;

    // descending timestep ladder T -> 1
    std::vector<int> ts(steps);
    for (int i = 0; i < steps; ++i) {
        double f = steps > 1 ? static_cast<double>(i) / (steps - 1) : 0.0;
        ts[i] = static_cast<int>(std::lround(T - f * (T - 1)));
    }

    VictimModel::Binding p = model.bind(false);
    NodePtr ref = ag::constant(ref_latent);
    NodePtr tokens = ag::constant(frame_tokens);

    Tensor z = gaussian_like(ref_latent.shape(), rng);
    for (int i = 0; i < steps; ++i) {
        const int t = ts[i];
        const double ab_t = sched.alpha_bar_at(t);
        const double ab_prev = i + 1 < steps ? sched.alpha_bar_at(ts[i + 1]) : 1.0;
        Tensor eps_hat = model.forward(p, ag::constant(z), t, ref, tokens).eps_hat->value;
        const double inv_sqrt_ab = 1.0 / std::sqrt(ab_t);
        const double sig_t = std::sqrt(1.0 - ab_t);
        const double sig_prev = std::sqrt(1.0 - ab_prev);
        const double c0 = std::sqrt(ab_prev);
        Tensor next(z.shape());
        for (std::int64_t k = 0; k < z.size(); ++k) {
            const double z0_hat = (z[k] - sig_t * eps_hat[k]) * inv_sqrt_ab;
            next[k] = c0 * z0_hat + sig_prev * eps_hat[k];
        }
        z = next;
    }
    return z;
}

FrameSequence sample_frames(const VictimModel& model, const PortraitImage& p_ref,
                            const AudioClip& audio, int steps, std::uint64_t seed) {
    p_ref.validate();
    audio.validate();
    const auto& cfg = model.config();
    if (p_ref.height != cfg.image_size || p_ref.width != cfg.image_size)
        throw InputError("sample_frames: portrait size does not match model");

    Tensor ref_latent = encode(p_ref);
    Tensor feats = audio_features(audio, cfg.audio_bands);
    const int n_frames = feats.dim(0);

    VictimModel::Binding pb = model.bind(false);
    Tensor all_tokens = model.project_tokens(pb, ag::constant(feats))->value;

    FrameSequence seq;
    seq.frames.resize(n_frames);
    Rng root(seed);
    parallel_for(n_frames, [&](int f) {
        std::vector<int> rows = context_rows(f, n_frames, cfg.audio_context);
        Tensor tokens({static_cast<int>(rows.size()), cfg.token_dim});
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (int j = 0; j < cfg.token_dim; ++j)
                tokens[static_cast<std::int64_t>(i) * cfg.token_dim + j] =
                    all_tokens[static_cast<std::int64_t>(rows[i]) * cfg.token_dim + j];
        Rng frame_rng = root.derive(Rng::mix(0x6672616d65, f));
        Tensor z0 = sample_latent(model, ref_latent, tokens, steps, frame_rng);
        seq.frames[f] = decode_latent(z0);
    });
    return seq;
}

} // namespace avshield
