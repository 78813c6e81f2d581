#include "avshield/audio_attack.hpp"

#include <cmath>
#include <limits>

namespace avshield {

using ag::NodePtr;

void CafTargetPlan::validate(int T) const {
    if (entries.empty()) throw ConfigError("caf plan: need at least one entry");
    for (const auto& e : entries) {
        const auto [lo, hi] = e.interval;
        if (lo < 1 || hi < lo || hi > T)
            throw ConfigError("caf plan: interval out of range [" + std::to_string(lo) + "," +
                              std::to_string(hi) + "]");
        if (e.units.empty()) throw ConfigError("caf plan: empty target set");
        for (const auto& u : e.units) parse_unit(u.name());
    }
    for (std::size_t i = 0; i < entries.size(); ++i)
        for (std::size_t j = i + 1; j < entries.size(); ++j) {
            const auto [alo, ahi] = entries[i].interval;
            const auto [blo, bhi] = entries[j].interval;
            if (alo <= bhi && blo <= ahi) throw ConfigError("caf plan: overlapping intervals");
        }
}

std::set<LayerBranchUnit> CafTargetPlan::all_target_units() const {
    std::set<LayerBranchUnit> units;
    for (const auto& e : entries) units.insert(e.units.begin(), e.units.end());
    return units;
}

CafTargetPlan default_caf_plan(int T) {
    CafTargetPlan plan;
    plan.entries = {
        {{1, 100}, {{"up_1", "lip"}}},
        {{400, 600}, {{"mid_0", "lip"}, {"mid_0", "expression"}}},
        {{900, 1000}, {{"mid_0", "lip"}, {"down_0", "lip"}}},
    };
    for (auto& e : plan.entries) e.interval.second = std::min(e.interval.second, T);
    return plan;
}

double db(const std::vector<double>& x) {
    double peak = 0.0;
    for (double v : x) peak = std::max(peak, std::abs(v));
    if (peak == 0.0) throw InputError("db: level undefined for all-zero input");
    return 20.0 * std::log10(peak);
}

double db_x(const std::vector<double>& delta, const std::vector<double>& x) {
    double peak = 0.0;
    for (double v : delta) peak = std::max(peak, std::abs(v));
    if (peak == 0.0) return -std::numeric_limits<double>::infinity();
    return 20.0 * std::log10(peak) - db(x);
}

std::vector<double> project_db(const std::vector<double>& delta, const std::vector<double>& x,
                               double bound) {
    double peak = 0.0;
    for (double v : x) peak = std::max(peak, std::abs(v));
    if (peak == 0.0) throw InputError("project_db: carrier has zero peak");
    const double cap = peak * std::pow(10.0, bound / 20.0);
    std::vector<double> out(delta.size());
    for (std::size_t i = 0; i < delta.size(); ++i) out[i] = std::clamp(delta[i], -cap, cap);
    return out;
}

double spatial_variance(const AttentionMap& map) {
    const int q = map.queries, j = map.tokens;
    if (q <= 0 || j <= 0 || map.weights.size() != static_cast<std::int64_t>(q) * j)
        throw InputError("spatial_variance: malformed attention map");
    double total = 0.0;
    for (int col = 0; col < j; ++col) {
        double mean = 0.0;
        for (int row = 0; row < q; ++row) mean += map.weights[static_cast<std::int64_t>(row) * j + col];
        mean /= q;
        double var = 0.0;
        for (int row = 0; row < q; ++row) {
            const double d = map.weights[static_cast<std::int64_t>(row) * j + col] - mean;
            var += d * d;
        }
        total += var / q;
    }
    return total / j;
}

namespace {

// column-variance mean as a graph op chain so gradients reach the waveform
NodePtr spatial_variance_graph(const NodePtr& map) {
    using namespace ag;
    NodePtr col_mean = mean_over_rows(map);
    NodePtr centered = sub_row_broadcast(map, col_mean);
    return mean_all(mul(centered, centered));
}

struct CafContext {
    VictimModel::Binding binding;
    NodePtr samples;   // leaf when attacking
    NodePtr tokens;    // full-sequence tokens through audio_features_graph
    Tensor ref_latent; // clean reference, constant throughout
};

CafContext make_context(const VictimModel& model, const PortraitImage& p_ref,
                        const AudioClip& a, bool track_audio_grad) {
    CafContext ctx;
    ctx.binding = model.bind(false);
    Tensor s = Tensor::from({static_cast<int>(a.samples.size())}, a.samples);
    ctx.samples = track_audio_grad ? ag::leaf(s) : ag::constant(s);
    NodePtr feats = audio_features_graph(ctx.samples, static_cast<int>(a.samples.size()),
                                         model.config().audio_bands);
    ctx.tokens = model.project_tokens(ctx.binding, feats);
    ctx.ref_latent = encode(p_ref);
    return ctx;
}

NodePtr caf_loss_graph(const VictimModel& model, const CafContext& ctx, int t, const Tensor& eps,
                       const std::set<LayerBranchUnit>& units) {
    using namespace ag;
    if (units.empty()) throw ConfigError("caf loss: empty target set");
    NodePtr z0 = constant(ctx.ref_latent);
    NodePtr z_t = forward_noise_graph(z0, t, constant(eps), model.schedule());
    DenoiseOutput out = model.forward(ctx.binding, z_t, t, z0, ctx.tokens, units);
    NodePtr total;
    for (const auto& u : units) {
        NodePtr v = spatial_variance_graph(out.attention.at(u));
        total = total ? add(total, v) : v;
    }
    return mul_scalar(total, 1.0 / static_cast<double>(units.size()));
}

} // namespace

double caf_loss(const VictimModel& model, const PortraitImage& p_ref, const AudioClip& a,
                std::pair<int, int> interval, const std::set<LayerBranchUnit>& units, Rng& rng) {
    p_ref.validate();
    a.validate();
    if (units.empty()) throw ConfigError("caf loss: empty target set");
    CafContext ctx = make_context(model, p_ref, a, false);
    const int t = static_cast<int>(rng.uniform_int(interval.first, interval.second));
    const int ls = model.config().latent_size();
    Tensor eps = gaussian_like({3, ls, ls}, rng);
    return caf_loss_graph(model, ctx, t, eps, units)->value[0];
}

AudioAttackResult attack_audio(const VictimModel& model, const PortraitImage& p_ref,
                               const AudioClip& a0, const AudioAttackConfig& cfg,
                               const CafTargetPlan& plan) {
    cfg.validate();
    p_ref.validate();
    a0.validate();
    plan.validate(model.schedule().T);

    double anchor_peak = 0.0;
    for (double v : a0.samples) anchor_peak = std::max(anchor_peak, std::abs(v));
    if (anchor_peak == 0.0) throw InputError("attack_audio: anchor has zero peak");
    const double eta = cfg.effective_eta(anchor_peak);
    const int ls = model.config().latent_size();

    Rng rng(cfg.seed);
    AudioPerturbationState state{a0, a0, 0, {}};
    for (int n = 0; n < cfg.iters; ++n) {
        // draw order: entry index, timestep, then noise elements
        const int e = static_cast<int>(rng.uniform_int(0, static_cast<long>(plan.entries.size()) - 1));
        const auto& entry = plan.entries[e];
        const int t = static_cast<int>(rng.uniform_int(entry.interval.first, entry.interval.second));
        Tensor eps = gaussian_like({3, ls, ls}, rng);

        CafContext ctx = make_context(model, p_ref, state.current, true);
        NodePtr loss = caf_loss_graph(model, ctx, t, eps, entry.units);
        const double value = loss->value[0];
        if (!std::isfinite(value)) throw AttackError("attack_audio: non-finite loss", n);
        ag::backward(loss);

        const Tensor& grad = ctx.samples->grad;
        std::vector<double> delta(a0.samples.size());
        for (std::size_t i = 0; i < delta.size(); ++i) {
            const double g = grad[static_cast<std::int64_t>(i)];
            const double step = g > 0.0 ? eta : (g < 0.0 ? -eta : 0.0);
            delta[i] = state.current.samples[i] - step - a0.samples[i];
        }
        delta = project_db(delta, a0.samples, cfg.db_bound);
        for (std::size_t i = 0; i < delta.size(); ++i)
            state.current.samples[i] = std::clamp(a0.samples[i] + delta[i], -1.0, 1.0);
        state.iteration = n + 1;
        state.loss_trace.push_back(value);
    }
    return {state.current, state.loss_trace};
}

double caf_validation_variance(const VictimModel& model, const PortraitImage& p_ref,
                               const AudioClip& a, const CafTargetPlan& plan,
                               std::uint64_t eps_seed) {
    plan.validate(model.schedule().T);
    CafContext ctx = make_context(model, p_ref, a, false);
    const int ls = model.config().latent_size();
    Rng rng(eps_seed);
    double total = 0.0;
    int count = 0;
    for (const auto& entry : plan.entries) {
        const int t = (entry.interval.first + entry.interval.second) / 2;
        Tensor eps = gaussian_like({3, ls, ls}, rng);
        NodePtr z_t = forward_noise_graph(ag::constant(ctx.ref_latent), t, ag::constant(eps),
                                          model.schedule());
        DenoiseOutput out =
            model.forward(ctx.binding, z_t, t, ag::constant(ctx.ref_latent), ctx.tokens, entry.units);
        for (const auto& u : entry.units) {
            const auto& node = out.attention.at(u);
            AttentionMap m{node->value.dim(0), node->value.dim(1), node->value};
            total += spatial_variance(m);
            ++count;
        }
    }
    return total / count;
}

} // namespace avshield
