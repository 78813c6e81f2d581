#include "avshield/image_attack.hpp"

#include <cmath>

namespace avshield {

using ag::NodePtr;

void IntervalPlan::validate(int T) const {
    if (intervals.empty()) throw ConfigError("interval plan: need at least one interval");
    if (weights.size() != intervals.size())
        throw ConfigError("interval plan: weights/intervals size mismatch");
    bool any_positive = false;
    for (std::size_t k = 0; k < intervals.size(); ++k) {
        const auto [lo, hi] = intervals[k];
        if (lo < 1 || hi < lo || hi > T)
            throw ConfigError("interval plan: interval out of range [" + std::to_string(lo) +
                              "," + std::to_string(hi) + "]");
        if (weights[k] < 0.0) throw ConfigError("interval plan: negative weight");
        any_positive |= weights[k] > 0.0;
    }
    if (!any_positive) throw ConfigError("interval plan: all weights zero");
}

IntervalPlan default_interval_plan(int T) {
    IntervalPlan plan;
    plan.intervals = {{1, 100}, {100, 200}, {300, 400}, {900, 1000}};
    for (auto& [lo, hi] : plan.intervals) hi = std::min(hi, T);
    plan.weights.assign(plan.intervals.size(), 1.0 / plan.intervals.size());
    return plan;
}

namespace {

struct LossContext {
    VictimModel::Binding binding;
    NodePtr tokens;
};

LossContext make_context(const VictimModel& model, const AudioClip& a) {
    LossContext ctx;
    ctx.binding = model.bind(false);
    Tensor feats = audio_features(a, model.config().audio_bands);
    ctx.tokens = model.project_tokens(ctx.binding, ag::constant(feats));
    return ctx;
}

NodePtr nullifying_loss_graph(const VictimModel& model, const LossContext& ctx,
                              const NodePtr& image, int t, const Tensor& eps) {
    using namespace ag;
    NodePtr z0 = encode_graph(image);
    if (!z0->value.same_shape(eps)) throw InputError("nullifying loss: eps shape mismatch");
    NodePtr z_t = forward_noise_graph(z0, t, constant(eps), model.schedule());
    NodePtr eps_hat = model.forward(ctx.binding, z_t, t, z0, ctx.tokens).eps_hat;
    NodePtr diff = sub(constant(eps), eps_hat);
    return sum_all(mul(diff, diff));
}

// Draw order per interval: t_k first, then the eps elements in index order.
NodePtr mis_loss_graph(const VictimModel& model, const LossContext& ctx, const NodePtr& image,
                       const IntervalPlan& plan, Rng& rng) {
    using namespace ag;
    const int ls = model.config().latent_size();
    NodePtr total;
    for (std::size_t k = 0; k < plan.intervals.size(); ++k) {
        const auto [lo, hi] = plan.intervals[k];
        const int t = static_cast<int>(rng.uniform_int(lo, hi));
        Tensor eps = gaussian_like({3, ls, ls}, rng);
        NodePtr term = mul_scalar(nullifying_loss_graph(model, ctx, image, t, eps), plan.weights[k]);
        total = total ? add(total, term) : term;
    }
    return total;
}

} // namespace

double nullifying_loss(const VictimModel& model, const PortraitImage& p, const AudioClip& a,
                       int t, const Tensor& eps) {
    p.validate();
    LossContext ctx = make_context(model, a);
    return nullifying_loss_graph(model, ctx, ag::constant(p.as_tensor()), t, eps)->value[0];
}

double mis_loss(const VictimModel& model, const PortraitImage& p, const AudioClip& a,
                const IntervalPlan& plan, Rng& rng) {
    p.validate();
    plan.validate(model.schedule().T);
    LossContext ctx = make_context(model, a);
    return mis_loss_graph(model, ctx, ag::constant(p.as_tensor()), plan, rng)->value[0];
}

ImagePerturbationState pgd_image_step(const ImagePerturbationState& state, const Tensor& grad,
                                      const ImageAttackConfig& cfg) {
    const auto& anchor = state.anchor.pixels;
    if (grad.size() != static_cast<std::int64_t>(anchor.size()))
        throw InputError("pgd_image_step: gradient shape mismatch");
    ImagePerturbationState next = state;
    next.iteration = state.iteration + 1;
    for (std::size_t i = 0; i < anchor.size(); ++i) {
        const double g = grad[static_cast<std::int64_t>(i)];
        const double step = g > 0.0 ? cfg.eta : (g < 0.0 ? -cfg.eta : 0.0);
        const double lo = std::max(anchor[i] - cfg.tau, 0.0);
        const double hi = std::min(anchor[i] + cfg.tau, 1.0);
        next.current.pixels[i] = std::clamp(state.current.pixels[i] - step, lo, hi);
    }
    return next;
}

ImageAttackResult attack_image(const VictimModel& model, const PortraitImage& p0,
                               const AudioClip& a, const ImageAttackConfig& cfg,
                               const IntervalPlan& plan) {
    cfg.validate();
    p0.validate();
    plan.validate(model.schedule().T);

    LossContext ctx = make_context(model, a);
    Rng rng(cfg.seed);
    ImagePerturbationState state{p0, p0, 0, {}};
    for (int n = 0; n < cfg.iters; ++n) {
        NodePtr image = ag::leaf(state.current.as_tensor());
        NodePtr loss = mis_loss_graph(model, ctx, image, plan, rng);
        const double value = loss->value[0];
        if (!std::isfinite(value)) throw AttackError("attack_image: non-finite loss", n);
        ag::backward(loss);
        state = pgd_image_step(state, image->grad, cfg);
        state.loss_trace.push_back(value);
    }
    return {state.current, state.loss_trace};
}

double nullifying_validation_loss(const VictimModel& model, const PortraitImage& p,
                                  const AudioClip& a, const std::vector<int>& t_grid,
                                  std::uint64_t eps_seed) {
    if (t_grid.empty()) throw ConfigError("validation loss: empty t grid");
    LossContext ctx = make_context(model, a);
    NodePtr image = ag::constant(p.as_tensor());
    const int ls = model.config().latent_size();
    Rng rng(eps_seed);
    double total = 0.0;
    for (int t : t_grid) {
        Tensor eps = gaussian_like({3, ls, ls}, rng);
        total += nullifying_loss_graph(model, ctx, image, t, eps)->value[0];
    }
    return total / static_cast<double>(t_grid.size());
}

} // namespace avshield
