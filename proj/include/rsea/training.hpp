#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rsea/graph_data.hpp"
#include "rsea/model.hpp"

namespace rsea {

enum class OptimizerKind { Sgd, Adam };

struct TrainConfig {
    int epochs = 200;
    /// Defaults to 20% of epochs when unset.
    std::optional<int> warmup_epochs;
    double learning_rate = 0.01;
    double lambda = 1e-4;
    OptimizerKind optimizer = OptimizerKind::Adam;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;
    bool enhancement_enabled = true;
    bool reliable_aggregation_enabled = true;

    int resolved_warmup() const;
};

void validate(const TrainConfig& cfg);

/// sum_k y_k (psi(S) - psi(alpha_k)).
double ace_loss(const DirichletParams& alpha, std::span<const double> y);
Var ace_loss(Var alpha, std::span<const double> y);

std::vector<double> one_hot(int label, std::size_t num_classes);

/// sum over layers of ace(fused alpha) + sum_j ace(view alpha) + lambda * ||layer params||_2.
Var total_loss(const ForwardTrace& trace, std::span<const double> y, const BoundParams& params, double lambda);

/// Adam or SGD over a fixed parameter list; moment buffers follow list order.
class Optimizer {
public:
    Optimizer(const TrainConfig& cfg, std::vector<Tensor*> params);
    void step();

private:
    TrainConfig cfg_;
    std::vector<Tensor*> params_;
    std::vector<std::vector<double>> m_, v_;
    long long t_ = 0;
};

struct EnhancementRecord {
    std::string instance_id;
    std::size_t view = 0;
    std::vector<double> trace;
    std::size_t total_enhanced = 0;
    std::size_t iterations = 0;
    double uncertainty_before = 0.0;
    double uncertainty_after = 0.0;
};

struct EpochStats {
    int epoch = 0;
    double loss = 0.0;
    std::vector<double> mean_uncertainty;  // per view, over train instances and layers
    std::vector<double> mean_p;            // per view, over train instances and layers
};

struct TrainReport {
    std::vector<EpochStats> epochs;
    std::vector<EnhancementRecord> enhancements;
    bool enhancement_ran = false;
};

std::string report_to_json(const TrainReport& report);

struct TrainResult {
    ModelParams params;
    TrainReport report;
    /// The dataset the final weights were trained on (enhanced when Phase 2 ran).
    Dataset dataset;
};

/// Warm-up on original adjacencies, freeze and enhance every instance/view, then
/// train on the enhanced graphs. Full batch, deterministic given seeds.
TrainResult train(const Dataset& ds, const Split& split, const ModelConfig& mcfg, const TrainConfig& tcfg);

/// Enhances every view of every instance with the layer-1 probe of `params`.
Dataset enhance_dataset(const Dataset& ds, const ModelParams& params, std::vector<EnhancementRecord>* records = nullptr);

ForwardOptions forward_options(const TrainConfig& cfg);

}  // namespace rsea
