#include "avshield/train.hpp"

#include <algorithm>
#include <cmath>

#include "avshield/parallel.hpp"

namespace avshield {

using ag::NodePtr;

namespace {

struct Example {
    int clip = 0;
    int frame = 0;
};

struct PreparedClip {
    Tensor ref_latent;
    Tensor features;                  // (F, feature_dim)
    std::vector<Tensor> frame_latents;
};

std::vector<PreparedClip> prepare(const VictimModel& model,
                                  const std::vector<SyntheticClip>& corpus) {
    std::vector<PreparedClip> out;
    out.reserve(corpus.size());
    for (const auto& clip : corpus) {
        PreparedClip p;
        p.ref_latent = encode(clip.reference);
        p.features = audio_features(clip.audio, model.config().audio_bands);
        for (const auto& f : clip.target_frames.frames) p.frame_latents.push_back(encode(f));
        out.push_back(std::move(p));
    }
    return out;
}

// per-element MSE loss graph for one example
NodePtr example_loss(const VictimModel& model, const VictimModel::Binding& binding,
                     const PreparedClip& clip, int frame, int t, const Tensor& eps) {
    using namespace ag;
    Tensor z_t = forward_noise(clip.frame_latents[frame], t, eps, model.schedule());
    std::vector<int> rows =
        context_rows(frame, static_cast<int>(clip.frame_latents.size()), model.config().audio_context);
    NodePtr tokens = model.project_tokens(
        binding, gather_rows(constant(clip.features), rows));
    NodePtr eps_hat =
        model.forward(binding, constant(z_t), t, constant(clip.ref_latent), tokens).eps_hat;
    NodePtr diff = sub(eps_hat, constant(eps));
    return mean_all(mul(diff, diff));
}

} // namespace

double validation_loss(const VictimModel& model, const std::vector<SyntheticClip>& corpus,
                       std::uint64_t val_seed, int n_points) {
    auto prepared = prepare(model, corpus);
    Rng rng(val_seed);
    const auto latent_shape = prepared[0].ref_latent.shape();
    double total = 0.0;
    VictimModel::Binding binding = model.bind(false);
    for (int i = 0; i < n_points; ++i) {
        const int c = static_cast<int>(rng.uniform_int(0, static_cast<long>(prepared.size()) - 1));
        const int f =
            static_cast<int>(rng.uniform_int(0, static_cast<long>(prepared[c].frame_latents.size()) - 1));
        const int t = static_cast<int>(rng.uniform_int(1, model.schedule().T));
        Tensor eps = gaussian_like(latent_shape, rng);
        total += example_loss(model, binding, prepared[c], f, t, eps)->value[0];
    }
    return total / n_points;
}

TrainResult train_toy(VictimModel& model, const std::vector<SyntheticClip>& corpus,
                      const TrainConfig& cfg, std::uint64_t seed) {
    if (corpus.empty()) throw TrainingError("train_toy: empty corpus");
    if (cfg.epochs < 0 || cfg.batch_size < 1) throw ConfigError("train_toy: bad config");

    auto prepared = prepare(model, corpus);
    const std::uint64_t val_seed = Rng::mix(seed, 0x76616c);

    TrainResult result;
    result.initial_val_loss = validation_loss(model, corpus, val_seed);

    std::vector<Example> examples;
    for (std::size_t c = 0; c < prepared.size(); ++c)
        for (std::size_t f = 0; f < prepared[c].frame_latents.size(); ++f)
            examples.push_back({static_cast<int>(c), static_cast<int>(f)});

    // Adam state
    const auto names = model.param_names();
    std::map<std::string, Tensor> m1, m2;
    for (const auto& n : names) {
        m1[n] = Tensor(model.param(n).shape());
        m2[n] = Tensor(model.param(n).shape());
    }
    std::int64_t step = 0;

    Rng rng(Rng::mix(seed, 0x747261696e));
    const auto latent_shape = prepared[0].ref_latent.shape();

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        // seeded Fisher-Yates shuffle
        for (std::size_t i = examples.size(); i > 1; --i)
            std::swap(examples[i - 1], examples[rng.uniform_int(0, static_cast<long>(i) - 1)]);

        double epoch_total = 0.0;
        for (std::size_t start = 0; start < examples.size(); start += cfg.batch_size) {
            const int batch = static_cast<int>(
                std::min<std::size_t>(cfg.batch_size, examples.size() - start));
            // draws happen on the master stream in batch order, then the
            // graphs run in parallel
            struct Item {
                Example ex;
                int t;
                Tensor eps;
                VictimModel::Binding binding;
                double loss = 0.0;
            };
            std::vector<Item> items(batch);
            for (int b = 0; b < batch; ++b) {
                items[b].ex = examples[start + b];
                items[b].t = static_cast<int>(rng.uniform_int(1, model.schedule().T));
                items[b].eps = gaussian_like(latent_shape, rng);
            }
            parallel_for(batch, [&](int b) {
                items[b].binding = model.bind(true);
                NodePtr loss = example_loss(model, items[b].binding, prepared[items[b].ex.clip],
                                            items[b].ex.frame, items[b].t, items[b].eps);
                items[b].loss = loss->value[0];
                ag::backward(loss);
            });

            double batch_loss = 0.0;
            for (const auto& it : items) batch_loss += it.loss;
            batch_loss /= batch;
            epoch_total += batch_loss * batch;
            if (!std::isfinite(batch_loss))
                throw TrainingError("train_toy: non-finite loss at epoch " +
                                    std::to_string(epoch));

            ++step;
            const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(step));
            for (const auto& n : names) {
                Tensor& p = model.param(n);
                Tensor& v1 = m1[n];
                Tensor& v2 = m2[n];
                for (std::int64_t i = 0; i < p.size(); ++i) {
                    double g = 0.0;
                    for (const auto& it : items) {
                        const Tensor& gt = it.binding.at(n)->grad;
                        if (gt.size() == p.size()) g += gt[i];
                    }
                    g /= batch;
                    v1[i] = cfg.adam_beta1 * v1[i] + (1.0 - cfg.adam_beta1) * g;
                    v2[i] = cfg.adam_beta2 * v2[i] + (1.0 - cfg.adam_beta2) * g * g;
                    p[i] -= cfg.lr * (v1[i] / bc1) / (std::sqrt(v2[i] / bc2) + cfg.adam_eps);
                }
            }
        }
        result.epoch_loss.push_back(epoch_total / examples.size());
    }

    result.final_val_loss = validation_loss(model, corpus, val_seed);
    return result;
}

} // namespace avshield
