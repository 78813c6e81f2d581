#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "avshield/autograd.hpp"
#include "avshield/media.hpp"
#include "avshield/rng.hpp"
#include "avshield/schedule.hpp"
#include "avshield/tensor.hpp"

namespace avshield {

// One cross-attention injection point: U-Net layer x conditioning branch.
struct LayerBranchUnit {
    std::string layer;  // down_0 | mid_0 | up_1
    std::string branch; // lip | expression | pose

    std::string name() const { return layer + "." + branch; }
    bool operator<(const LayerBranchUnit& o) const {
        return layer != o.layer ? layer < o.layer : branch < o.branch;
    }
    bool operator==(const LayerBranchUnit& o) const {
        return layer == o.layer && branch == o.branch;
    }
};

inline const std::array<std::string, 3>& unit_layers() {
    static const std::array<std::string, 3> v = {"down_0", "mid_0", "up_1"};
    return v;
}
inline const std::array<std::string, 3>& unit_branches() {
    static const std::array<std::string, 3> v = {"lip", "expression", "pose"};
    return v;
}

std::vector<LayerBranchUnit> all_units();
LayerBranchUnit parse_unit(const std::string& name); // "layer.branch"

// Row-stochastic attention weights: Q spatial queries over J audio tokens.
struct AttentionMap {
    int queries = 0;
    int tokens = 0;
    Tensor weights; // (Q, J)
};

struct VictimConfig {
    int image_size = 64;    // H = W
    int width = 12;         // feature channels per block
    int attn_dim = 6;       // d_k
    int token_dim = 8;      // audio token dimension
    int time_dim = 8;       // sinusoidal embedding size
    int audio_bands = 8;    // triangular filters (feature dim = 1 + bands)
    int audio_context = 2;  // +-frames of audio feature context per video frame
    int schedule_T = 1000;
    double beta_start = 1e-4;
    double beta_end = 0.02;

    int latent_size() const { return image_size / 2; }
    int feature_dim() const { return 1 + audio_bands; }

    void validate() const {
        if (image_size < 8 || image_size % 4 != 0)
            throw ConfigError("victim config: image_size must be a multiple of 4, >= 8");
        if (width < 1 || attn_dim < 1 || token_dim < 1 || audio_bands < 1 || audio_context < 0)
            throw ConfigError("victim config: bad dimensions");
    }
};

// Differentiable feature extraction: per 40 ms frame, log(RMS + 1e-6) plus
// triangular filter-bank energies over DFT magnitudes. Gradient flows back to
// the raw samples through the graph.
ag::NodePtr audio_features_graph(const ag::NodePtr& samples, int n_samples, int bands);
Tensor audio_features(const AudioClip& a, int bands = 8);

// Filter-bank weights (bands x bins) for a frame of kSamplesPerFrame samples;
// triangles linearly spaced between 0 and the Nyquist frequency.
Tensor filterbank_weights(int bands);

struct DenoiseOutput {
    ag::NodePtr eps_hat;                                  // (3, h, w)
    std::map<LayerBranchUnit, ag::NodePtr> attention;     // tapped softmax maps
};

// Toy conditional denoiser: three blocks (down_0 -> mid_0 -> up_1), each a
// 3x3 conv mixer with a time-embedding channel bias and three parallel
// cross-attention branches summed into the features. The reference portrait
// conditions through its encoded latent concatenated at the input; audio
// conditions only through the nine cross-attention units.
class VictimModel {
public:
    VictimModel() = default;
    VictimModel(VictimConfig cfg, std::uint64_t seed);

    const VictimConfig& config() const { return cfg_; }
    const DiffusionSchedule& schedule() const { return schedule_; }
    std::uint64_t training_seed() const { return seed_; }
    void set_training_seed(std::uint64_t s) { seed_ = s; }

    std::vector<std::string> param_names() const;
    Tensor& param(const std::string& name);
    const Tensor& param(const std::string& name) const;

    // DDPM convention option used by tests and fresh training setups.
    void zero_head();

    // Binds every parameter into a fresh graph. With requires_grad the same
    // binding must be reused for all forwards that feed one backward pass.
    struct Binding {
        std::map<std::string, ag::NodePtr> nodes;
        const ag::NodePtr& at(const std::string& name) const;
    };
    Binding bind(bool requires_grad) const;

    // Audio tokens from a feature matrix (F, feature_dim) -> (F, token_dim).
    ag::NodePtr project_tokens(const Binding& p, const ag::NodePtr& features) const;

    // Core forward pass. z_t and ref_latent are (3,h,w); tokens (J,token_dim).
    DenoiseOutput forward(const Binding& p, const ag::NodePtr& z_t, int t,
                          const ag::NodePtr& ref_latent, const ag::NodePtr& tokens,
                          const std::set<LayerBranchUnit>& tap = {}) const;

    // Plain-tensor convenience wrapper per the model contract, without
    // gradient tracking. Audio features are the full sequence (J = F tokens).
    std::pair<Tensor, std::map<LayerBranchUnit, AttentionMap>> denoise_predict(
        const Tensor& z_t, int t, const PortraitImage& p_ref, const Tensor& audio_feat,
        const std::set<LayerBranchUnit>& tap = {}) const;

    Tensor time_embedding(int t) const;

private:
    VictimConfig cfg_;
    DiffusionSchedule schedule_;
    std::uint64_t seed_ = 0;
    std::map<std::string, Tensor> params_;

    void init_params();
};

// 2x2 average-pooling encoder (graph and plain forms) and the matching
// nearest-neighbor decoder.
ag::NodePtr encode_graph(const ag::NodePtr& image);
Tensor encode(const PortraitImage& p);
PortraitImage decode_latent(const Tensor& latent);

// z_t = sqrt(abar_t) z0 + sqrt(1 - abar_t) eps
Tensor forward_noise(const Tensor& z0, int t, const Tensor& eps, const DiffusionSchedule& sched);
ag::NodePtr forward_noise_graph(const ag::NodePtr& z0, int t, const ag::NodePtr& eps,
                                const DiffusionSchedule& sched);

Tensor gaussian_like(const std::vector<int>& shape, Rng& rng);

// Token row indices for one video frame: the +-context window, edge-clamped.
std::vector<int> context_rows(int frame, int total, int context);

} // namespace avshield
