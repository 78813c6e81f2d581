#include "avshield/victim_model.hpp"

#include <cmath>

namespace avshield {

using ag::NodePtr;

std::vector<LayerBranchUnit> all_units() {
    std::vector<LayerBranchUnit> units;
    for (const auto& l : unit_layers())
        for (const auto& b : unit_branches()) units.push_back({l, b});
    return units;
}

LayerBranchUnit parse_unit(const std::string& name) {
    auto dot = name.find('.');
    if (dot == std::string::npos) throw ConfigError("unit name must be layer.branch: " + name);
    LayerBranchUnit u{name.substr(0, dot), name.substr(dot + 1)};
    bool layer_ok = false, branch_ok = false;
    for (const auto& l : unit_layers()) layer_ok |= (l == u.layer);
    for (const auto& b : unit_branches()) branch_ok |= (b == u.branch);
    if (!layer_ok || !branch_ok) throw ConfigError("unknown layer-branch unit: " + name);
    return u;
}

// --- audio features ---

Tensor filterbank_weights(int bands) {
    const int bins = kSamplesPerFrame / 2 + 1;
    const double nyquist = kSampleRate / 2.0;
    const double bin_hz = static_cast<double>(kSampleRate) / kSamplesPerFrame;
    std::vector<double> edges(bands + 2);
    for (int i = 0; i < bands + 2; ++i) edges[i] = nyquist * i / (bands + 1);
    Tensor w({bands, bins});
    for (int b = 0; b < bands; ++b) {
        const double lo = edges[b], mid = edges[b + 1], hi = edges[b + 2];
        for (int k = 0; k < bins; ++k) {
            const double f = k * bin_hz;
            double v = 0.0;
            if (f > lo && f < mid)
                v = (f - lo) / (mid - lo);
            else if (f >= mid && f < hi)
                v = (hi - f) / (hi - mid);
            w[static_cast<std::int64_t>(b) * bins + k] = v;
        }
    }
    return w;
}

namespace {

// Real-DFT basis for one frame: rows are cos/-sin at each bin.
const Tensor& dft_cos() {
    static const Tensor t = [] {
        const int bins = kSamplesPerFrame / 2 + 1;
        Tensor m({kSamplesPerFrame, bins}); // transposed for frames x basis matmul
        for (int n = 0; n < kSamplesPerFrame; ++n)
            for (int k = 0; k < bins; ++k)
                m[static_cast<std::int64_t>(n) * bins + k] =
                    std::cos(2.0 * M_PI * k * n / kSamplesPerFrame);
        return m;
    }();
    return t;
}

const Tensor& dft_sin() {
    static const Tensor t = [] {
        const int bins = kSamplesPerFrame / 2 + 1;
        Tensor m({kSamplesPerFrame, bins});
        for (int n = 0; n < kSamplesPerFrame; ++n)
            for (int k = 0; k < bins; ++k)
                m[static_cast<std::int64_t>(n) * bins + k] =
                    -std::sin(2.0 * M_PI * k * n / kSamplesPerFrame);
        return m;
    }();
    return t;
}

} // namespace

NodePtr audio_features_graph(const NodePtr& samples, int n_samples, int bands) {
    using namespace ag;
    if (n_samples <= 0) throw InputError("audio features: empty clip");
    const int frames = (n_samples + kSamplesPerFrame - 1) / kSamplesPerFrame;
    NodePtr framed = frame_signal(samples, kSamplesPerFrame, frames); // (F, 640)

    // log-RMS column
    NodePtr sq = mul(framed, framed);
    NodePtr mean_sq = mean_over_cols(sq);                   // (F)
    NodePtr rms = sqrt_op(reshape(mean_sq, {frames, 1}));   // (F,1)
    NodePtr log_rms = log_op(add_scalar(rms, 1e-6));

    // filter-bank energies over DFT magnitudes
    NodePtr re = matmul(framed, constant(dft_cos()));       // (F, bins)
    NodePtr im = matmul(framed, constant(dft_sin()));
    NodePtr mag = sqrt_op(add(mul(re, re), mul(im, im)));   // (F, bins)
    Tensor fbank = filterbank_weights(bands);               // (bands, bins)
    NodePtr energies = matmul_nt(mag, constant(fbank));     // (F, bands)

    // assemble rows [log_rms | energies]; horizontal concat expressed as two
    // column-selector matmuls so the gradient splits cleanly
    const int d = 1 + bands;
    Tensor sel_a({1, d});
    sel_a[0] = 1.0;
    Tensor sel_b({bands, d});
    for (int i = 0; i < bands; ++i) sel_b[static_cast<std::int64_t>(i) * d + i + 1] = 1.0;
    return add(matmul(log_rms, constant(sel_a)), matmul(energies, constant(sel_b)));
}

Tensor audio_features(const AudioClip& a, int bands) {
    a.validate();
    NodePtr s = ag::constant(Tensor::from({static_cast<int>(a.samples.size())}, a.samples));
    return audio_features_graph(s, static_cast<int>(a.samples.size()), bands)->value;
}

// --- encoder / noising ---

NodePtr encode_graph(const NodePtr& image) { return ag::avg_pool2(image); }

Tensor encode(const PortraitImage& p) {
    p.validate();
    return ag::avg_pool2(ag::constant(p.as_tensor()))->value;
}

PortraitImage decode_latent(const Tensor& latent) {
    Tensor up = ag::upsample_nearest2(ag::constant(latent))->value;
    for (std::int64_t i = 0; i < up.size(); ++i) up[i] = std::clamp(up[i], 0.0, 1.0);
    return PortraitImage::from_tensor(up);
}

Tensor forward_noise(const Tensor& z0, int t, const Tensor& eps, const DiffusionSchedule& sched) {
    if (!z0.same_shape(eps)) throw InputError("forward_noise: eps shape mismatch");
    const double ab = sched.alpha_bar_at(t);
    const double c0 = std::sqrt(ab), c1 = std::sqrt(1.0 - ab);
    Tensor out(z0.shape());
    for (std::int64_t i = 0; i < out.size(); ++i) out[i] = c0 * z0[i] + c1 * eps[i];
    return out;
}

NodePtr forward_noise_graph(const NodePtr& z0, int t, const NodePtr& eps,
                            const DiffusionSchedule& sched) {
    const double ab = sched.alpha_bar_at(t);
    return ag::add(ag::mul_scalar(z0, std::sqrt(ab)), ag::mul_scalar(eps, std::sqrt(1.0 - ab)));
}

Tensor gaussian_like(const std::vector<int>& shape, Rng& rng) {
    Tensor t(shape);
    for (std::int64_t i = 0; i < t.size(); ++i) t[i] = rng.normal();
    return t;
}

std::vector<int> context_rows(int frame, int total, int context) {
    std::vector<int> rows;
    rows.reserve(2 * context + 1);
    for (int k = -context; k <= context; ++k)
        rows.push_back(std::clamp(frame + k, 0, total - 1));
    return rows;
}

// --- model ---

VictimModel::VictimModel(VictimConfig cfg, std::uint64_t seed) : cfg_(cfg), seed_(seed) {
    cfg_.validate();
    schedule_ = build_schedule(cfg_.schedule_T, cfg_.beta_start, cfg_.beta_end);
    init_params();
}

namespace {

Tensor init_matrix(std::vector<int> shape, int fan_in, Rng rng) {
    Tensor t(shape);
    const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::int64_t i = 0; i < t.size(); ++i) t[i] = scale * rng.normal();
    return t;
}

} // namespace

void VictimModel::init_params() {
    const int w = cfg_.width, dk = cfg_.attn_dim, dt = cfg_.token_dim, te = cfg_.time_dim;
    Rng root(seed_);
    auto mat = [&](const std::string& name, std::vector<int> shape, int fan_in) {
        params_[name] = init_matrix(std::move(shape), fan_in, root.derive(name));
    };
    auto zeros = [&](const std::string& name, std::vector<int> shape) {
        params_[name] = Tensor(std::move(shape));
    };

    const std::array<int, 3> conv_in = {6, w, w};
    for (std::size_t i = 0; i < unit_layers().size(); ++i) {
        const std::string& layer = unit_layers()[i];
        mat(layer + ".conv.w", {w, conv_in[i], 3, 3}, conv_in[i] * 9);
        zeros(layer + ".conv.b", {w});
        mat(layer + ".time.w", {te, w}, te);
        zeros(layer + ".time.b", {w});
        for (const auto& branch : unit_branches()) {
            const std::string u = layer + "." + branch;
            mat(u + ".wq", {w, dk}, w);
            mat(u + ".wk", {dt, dk}, dt);
            mat(u + ".wv", {dt, dk}, dt);
            mat(u + ".wo", {dk, w}, dk);
        }
    }
    mat("audio.proj.w", {cfg_.feature_dim(), dt}, cfg_.feature_dim());
    zeros("audio.proj.b", {dt});
    mat("head.w", {3, w, 3, 3}, w * 9);
    zeros("head.b", {3});
}

std::vector<std::string> VictimModel::param_names() const {
    std::vector<std::string> names;
    names.reserve(params_.size());
    for (const auto& [k, v] : params_) names.push_back(k);
    return names;
}

Tensor& VictimModel::param(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw ConfigError("unknown parameter: " + name);
    return it->second;
}

const Tensor& VictimModel::param(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw ConfigError("unknown parameter: " + name);
    return it->second;
}

void VictimModel::zero_head() {
    param("head.w").fill(0.0);
    param("head.b").fill(0.0);
}

const NodePtr& VictimModel::Binding::at(const std::string& name) const {
    auto it = nodes.find(name);
    if (it == nodes.end()) throw ConfigError("unbound parameter: " + name);
    return it->second;
}

VictimModel::Binding VictimModel::bind(bool requires_grad) const {
    Binding b;
    for (const auto& [name, tensor] : params_)
        b.nodes[name] = requires_grad ? ag::leaf(tensor) : ag::constant(tensor);
    return b;
}

Tensor VictimModel::time_embedding(int t) const {
    const int e = cfg_.time_dim;
    const int half = e / 2;
    Tensor emb({e});
    for (int i = 0; i < half; ++i) {
        const double freq = std::exp(-std::log(10000.0) * i / half);
        emb[2 * i] = std::sin(t * freq);
        emb[2 * i + 1] = std::cos(t * freq);
    }
    return emb;
}

NodePtr VictimModel::project_tokens(const Binding& p, const NodePtr& features) const {
    return ag::linear(features, p.at("audio.proj.w"), p.at("audio.proj.b"));
}

DenoiseOutput VictimModel::forward(const Binding& p, const NodePtr& z_t, int t,
                                   const NodePtr& ref_latent, const NodePtr& tokens,
                                   const std::set<LayerBranchUnit>& tap) const {
    using namespace ag;
    if (t < 1 || t > schedule_.T) throw StepError("timestep out of range: " + std::to_string(t));
    for (const auto& u : tap) parse_unit(u.name()); // validates the tap set
    const int w = cfg_.width;
    const double attn_scale = 1.0 / std::sqrt(static_cast<double>(cfg_.attn_dim));

    DenoiseOutput out;
    NodePtr temb = constant(time_embedding(t));
    NodePtr temb_row = reshape(temb, {1, cfg_.time_dim});

    auto run_block = [&](const std::string& layer, const NodePtr& x) -> NodePtr {
        NodePtr h = conv3x3(x, p.at(layer + ".conv.w"), p.at(layer + ".conv.b"));
        NodePtr tb = linear(temb_row, p.at(layer + ".time.w"), p.at(layer + ".time.b"));
        h = add_channel_bias(h, reshape(tb, {w}));
        h = tanh_op(h);
        const int hh = h->value.dim(1), ww = h->value.dim(2);
        const int q = hh * ww;
        NodePtr hq = reshape(h, {q, w});
        NodePtr att;
        for (const auto& branch : unit_branches()) {
            const std::string u = layer + "." + branch;
            NodePtr qm = matmul(hq, p.at(u + ".wq"));
            NodePtr km = matmul(tokens, p.at(u + ".wk"));
            NodePtr vm = matmul(tokens, p.at(u + ".wv"));
            NodePtr scores = mul_scalar(matmul_nt(qm, km), attn_scale);
            NodePtr map = softmax_rows(scores);
            LayerBranchUnit unit{layer, branch};
            if (tap.count(unit)) out.attention[unit] = map;
            NodePtr y = matmul(matmul(map, vm), p.at(u + ".wo"));
            att = att ? add(att, y) : y;
        }
        return add(h, reshape(att, {w, hh, ww}));
    };

    NodePtr x = concat_channels(z_t, ref_latent); // (6, h, w)
    NodePtr down = run_block("down_0", x);
    NodePtr mid = run_block("mid_0", avg_pool2(down));
    NodePtr up_in = add(upsample_nearest2(mid), down); // skip connection
    NodePtr up = run_block("up_1", up_in);
    out.eps_hat = conv3x3(up, p.at("head.w"), p.at("head.b"));
    return out;
}

std::pair<Tensor, std::map<LayerBranchUnit, AttentionMap>> VictimModel::denoise_predict(
    const Tensor& z_t, int t, const PortraitImage& p_ref, const Tensor& audio_feat,
    const std::set<LayerBranchUnit>& tap) const {
    using namespace ag;
    const int ls = cfg_.latent_size();
    if (z_t.ndim() != 3 || z_t.dim(0) != 3 || z_t.dim(1) != ls || z_t.dim(2) != ls)
        throw InputError("denoise_predict: latent shape mismatch");
    if (audio_feat.ndim() != 2 || audio_feat.dim(1) != cfg_.feature_dim())
        throw InputError("denoise_predict: feature dim mismatch");
    Binding p = bind(false);
    NodePtr ref = encode_graph(constant(p_ref.as_tensor()));
    NodePtr tokens = project_tokens(p, constant(audio_feat));
    DenoiseOutput o = forward(p, constant(z_t), t, ref, tokens, tap);
    std::map<LayerBranchUnit, AttentionMap> maps;
    for (const auto& [unit, node] : o.attention)
        maps[unit] = AttentionMap{node->value.dim(0), node->value.dim(1), node->value};
    return {o.eps_hat->value, std::move(maps)};
}

} // namespace avshield
