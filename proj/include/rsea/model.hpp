#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rsea/enhancement.hpp"
#include "rsea/graph_data.hpp"
#include "rsea/subjective_logic.hpp"
#include "rsea/tensor.hpp"

namespace rsea {

enum class Activation { Relu };

struct ModelConfig {
    /// [D, D^(1), ..., D^(L)]
    std::vector<std::size_t> layer_dims;
    std::size_t num_views = 1;
    std::size_t num_classes = 2;
    Activation activation = Activation::Relu;
    std::uint64_t seed = 0;
    /// Backpropagate through the aggregation parameters. Off by default: p is a constant.
    bool aggregation_gradient = false;

    std::size_t num_layers() const { return layer_dims.empty() ? 0 : layer_dims.size() - 1; }
};

void validate(const ModelConfig& cfg);

struct ModelParams {
    std::vector<std::vector<Tensor>> intra;  // [L][V], D^(l-1) x D^(l)
    std::vector<std::vector<Tensor>> fnn;    // [L][V], D^(l) x K
    std::vector<Tensor> fnn_fused;           // [L],    D^(l) x K
    std::vector<Tensor> inter;               // [L],    V x V

    /// Parameters of layer `l` in checkpoint order.
    std::vector<Tensor*> layer(std::size_t l);
    std::vector<const Tensor*> layer(std::size_t l) const;
    /// Every parameter in checkpoint order: per layer intra[0..V), fnn[0..V), fnn_fused, inter.
    std::vector<Tensor*> all();
    std::vector<const Tensor*> all() const;
    std::size_t count() const;
    void zero_grad();

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Glorot-uniform initialization, seeded by cfg.seed.
ModelParams init_params(const ModelConfig& cfg);

/// Parameters bound to a tape, either as trainable leaves or as constants.
struct BoundParams {
    std::vector<std::vector<Var>> intra;
    std::vector<std::vector<Var>> fnn;
    std::vector<Var> fnn_fused;
    std::vector<Var> inter;

    std::vector<Var> layer(std::size_t l) const;
};

BoundParams bind_trainable(Tape& tape, ModelParams& params);
BoundParams bind_frozen(Tape& tape, const ModelParams& params);

struct ForwardOptions {
    /// false: p is fixed to all-ones (no reliability weighting).
    bool reliable_aggregation = true;
    /// Overrides p per layer; used to hold p fixed in finite-difference checks.
    std::optional<std::vector<std::vector<double>>> fixed_p;
};

struct LayerTrace {
    std::vector<Var> view_features;   // F^(l*)_j, N x D^(l)
    std::vector<Var> view_alpha;      // per-view Dirichlet parameters, length K
    std::vector<Opinion> opinions;
    std::vector<double> p;            // aggregation parameters
    std::vector<Var> mixed_features;  // F^(l)_j, N x D^(l)
    Var fused_alpha;
};

struct ForwardTrace {
    std::vector<LayerTrace> layers;
    Var embedding;  // Z, length D^(L)
};

// ---- building blocks ----

/// relu(A F W)
Var intra_forward(Var adjacency, Var features, Var weight);
/// softplus(F W) mean-pooled over nodes: length-K evidence.
Var view_evidence(Var features, Var head);
/// p_j = Var(b_j) / u_j per view.
std::vector<double> aggregation_params(std::span<const Opinion> opinions);
/// Differentiable p for one view from its alpha.
Var aggregation_param(Var alpha);
/// F_j = relu(sum_j' W[j'][j] p_j' F*_j'); p given as a 1 x V row.
std::vector<Var> inter_forward(std::span<const Var> view_features, Var p_row, Var mixing);
/// Mean over views and nodes.
Var readout(std::span<const Var> final_features);

ForwardTrace model_forward(Tape& tape, const MultiViewGraph& g, const BoundParams& params, const ModelConfig& cfg,
                           const ForwardOptions& opts = {});

/// Embedding Z for one instance, computed without gradients.
std::vector<double> embed(const MultiViewGraph& g, const ModelParams& params, const ModelConfig& cfg,
                          const ForwardOptions& opts = {});

/// Layer-1 uncertainty of view `view` for a candidate adjacency (frozen weights).
double view_uncertainty(const Tensor& adjacency, const Tensor& features, const ModelParams& params,
                        std::size_t view);
/// Probe for reliable_enhance bound to one view's features; `params` must outlive it.
UncertaintyProbe make_probe(const ModelParams& params, const Tensor& features, std::size_t view);

// ---- checkpoint ----

struct Checkpoint {
    ModelConfig config;
    ModelParams params;
    bool reliable_aggregation = true;
};

std::string checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const std::string& text);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace rsea
