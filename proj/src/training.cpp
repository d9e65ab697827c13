#include "rsea/training.hpp"

#include <cmath>

#include <spdlog/spdlog.h>

#include "json.hpp"
#include "rsea/error.hpp"
#include "rsea/special.hpp"

namespace rsea {

int TrainConfig::resolved_warmup() const {
    return warmup_epochs.value_or(static_cast<int>(std::lround(0.2 * epochs)));
}

void validate(const TrainConfig& cfg) {
    if (cfg.epochs < 1) throw ConfigError("train config: epochs must be >= 1");
    const int warmup = cfg.resolved_warmup();
    if (warmup < 0 || warmup > cfg.epochs) throw ConfigError("train config: require epochs >= warmup_epochs >= 0");
    if (!(cfg.learning_rate > 0.0)) throw ConfigError("train config: learning_rate must be > 0");
    if (!(cfg.lambda >= 0.0)) throw ConfigError("train config: lambda must be >= 0");
}

ForwardOptions forward_options(const TrainConfig& cfg) {
    ForwardOptions opts;
    opts.reliable_aggregation = cfg.reliable_aggregation_enabled;
    return opts;
}

// ---- loss ---------------------------------------------------------------------

std::vector<double> one_hot(int label, std::size_t num_classes) {
    std::vector<double> y(num_classes, 0.0);
    y.at(static_cast<std::size_t>(label)) = 1.0;
    return y;
}

double ace_loss(const DirichletParams& alpha, std::span<const double> y) {
    if (y.size() != alpha.alpha.size()) throw ShapeError("ace_loss", std::to_string(alpha.alpha.size()), std::to_string(y.size()));
    for (double a : alpha.alpha) {
        if (!(a >= 1.0)) throw DomainError("ace_loss: alpha entries must be >= 1");
    }
    const double psi_s = digamma(alpha.strength);
    double loss = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) {
        if (y[k] != 0.0) loss += y[k] * (psi_s - digamma(alpha.alpha[k]));
    }
    return loss;
}

Var ace_loss(Var alpha, std::span<const double> y) {
    if (y.size() != alpha.value().numel()) throw ShapeError("ace_loss", shape_str(alpha.shape()), std::to_string(y.size()));
    for (double a : alpha.value().values()) {
        if (!(a >= 1.0)) throw DomainError("ace_loss: alpha entries must be >= 1");
    }
    double y_total = 0.0;
    for (double v : y) y_total += v;
    Tape& tape = *alpha.tape();
    Var labels = tape.constant(Tensor(alpha.shape(), std::vector<double>(y.begin(), y.end())));
    return scale(digamma(sum(alpha)), y_total) - sum(mul(labels, digamma(alpha)));
}

Var total_loss(const ForwardTrace& trace, std::span<const double> y, const BoundParams& params, double lambda) {
    if (trace.layers.empty()) throw TapeError("total_loss: empty forward trace");
    Var total;
    auto accumulate = [&total](Var term) { total = total.valid() ? total + term : term; };
    for (std::size_t l = 0; l < trace.layers.size(); ++l) {
        const LayerTrace& lt = trace.layers[l];
        if (!lt.fused_alpha.valid() || lt.view_alpha.empty()) throw TapeError("total_loss: incomplete layer trace");
        accumulate(ace_loss(lt.fused_alpha, y));
        for (Var alpha : lt.view_alpha) accumulate(ace_loss(alpha, y));
        if (lambda > 0.0) {
            Var squares;
            for (Var w : params.layer(l)) {
                Var s = sum_squares(w);
                squares = squares.valid() ? squares + s : s;
            }
            accumulate(scale(sqrt(squares), lambda));
        }
    }
    return total;
}

// ---- optimizer ------------------------------------------------------------------

Optimizer::Optimizer(const TrainConfig& cfg, std::vector<Tensor*> params) : cfg_(cfg), params_(std::move(params)) {
    for (Tensor* p : params_) {
        if (!p->requires_grad()) p->set_requires_grad(true);
        m_.emplace_back(p->numel(), 0.0);
        v_.emplace_back(p->numel(), 0.0);
    }
}

void Optimizer::step() {
    ++t_;
    const double lr = cfg_.learning_rate;
    if (cfg_.optimizer == OptimizerKind::Sgd) {
        for (Tensor* p : params_) {
            auto w = p->values();
            auto g = p->grad();
            for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * g[i];
        }
        return;
    }
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
        auto w = params_[k]->values();
        auto g = params_[k]->grad();
        auto& m = m_[k];
        auto& v = v_[k];
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
            w[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg_.epsilon);
        }
    }
}

// ---- enhancement phase -------------------------------------------------------------

Dataset enhance_dataset(const Dataset& ds, const ModelParams& params, std::vector<EnhancementRecord>* records) {
    Dataset out = ds;
    for (auto& g : out.instances) {
        for (std::size_t j = 0; j < g.views.size(); ++j) {
            GraphView& view = g.views[j];
            const UncertaintyProbe probe = make_probe(params, view.features, j);
            const double before = probe(view.adjacency);
            EnhancementOutcome outcome = reliable_enhance(view, probe);
            view.adjacency = std::move(outcome.enhanced_adjacency);
            if (records) {
                records->push_back(EnhancementRecord{g.id, j, std::move(outcome.uncertainty_trace), outcome.total_enhanced,
                                                     outcome.iterations, before, probe(view.adjacency)});
            }
        }
    }
    return out;
}

// ---- training loop ------------------------------------------------------------------

namespace {

void check_compatible(const Dataset& ds, const ModelConfig& mcfg) {
    if (static_cast<std::size_t>(ds.num_views) != mcfg.num_views ||
        static_cast<std::size_t>(ds.num_classes) != mcfg.num_classes ||
        static_cast<std::size_t>(ds.feature_dim) != mcfg.layer_dims.front()) {
        throw ConfigError("model config does not match dataset (views, classes or feature dim)");
    }
}

}  // namespace

TrainResult train(const Dataset& ds, const Split& split, const ModelConfig& mcfg, const TrainConfig& tcfg) {
    validate(mcfg);
    validate(tcfg);
    check_compatible(ds, mcfg);
    if (split.train.empty()) throw ConfigError("train: empty training split");
    for (std::size_t i : split.train)
        if (i >= ds.instances.size()) throw ConfigError("train: split index out of range");

    TrainResult result{init_params(mcfg), {}, ds};
    ModelParams& params = result.params;
    Optimizer optimizer(tcfg, params.all());
    const ForwardOptions opts = forward_options(tcfg);
    const std::size_t V = mcfg.num_views, K = mcfg.num_classes;
    const double inv_m = 1.0 / static_cast<double>(split.train.size());

    auto run_epoch = [&](int epoch) {
        params.zero_grad();
        EpochStats stats;
        stats.epoch = epoch;
        stats.mean_uncertainty.assign(V, 0.0);
        stats.mean_p.assign(V, 0.0);
        try {
            for (std::size_t i : split.train) {
                const MultiViewGraph& g = result.dataset.instances[i];
                Tape tape;
                const BoundParams bound = bind_trainable(tape, params);
                const ForwardTrace trace = model_forward(tape, g, bound, mcfg, opts);
                const auto y = one_hot(g.label, K);
                Var loss = total_loss(trace, y, bound, tcfg.lambda);
                stats.loss += loss.item() * inv_m;
                tape.backward(scale(loss, inv_m));
                const double per = inv_m / static_cast<double>(trace.layers.size());
                for (const auto& lt : trace.layers) {
                    for (std::size_t j = 0; j < V; ++j) {
                        stats.mean_uncertainty[j] += lt.opinions[j].uncertainty * per;
                        stats.mean_p[j] += lt.p[j] * per;
                    }
                }
            }
        } catch (const NonFiniteError& e) {
            throw DivergenceError(epoch, e.what());
        }
        if (!std::isfinite(stats.loss)) throw DivergenceError(epoch, "loss is not finite");
        optimizer.step();
        spdlog::debug("epoch {} loss {:.6f}", epoch, stats.loss);
        result.report.epochs.push_back(std::move(stats));
    };

    const int warmup = tcfg.resolved_warmup();
    for (int e = 1; e <= warmup; ++e) run_epoch(e);
    if (tcfg.enhancement_enabled) {
        result.dataset = enhance_dataset(result.dataset, params, &result.report.enhancements);
        result.report.enhancement_ran = true;
        spdlog::info("enhanced {} views after {} warm-up epochs", result.report.enhancements.size(), warmup);
    }
    for (int e = warmup + 1; e <= tcfg.epochs; ++e) run_epoch(e);
    return result;
}

std::string report_to_json(const TrainReport& report) {
    using json = nlohmann::json;
    json doc;
    json epochs = json::array();
    for (const auto& e : report.epochs) {
        epochs.push_back({{"epoch", e.epoch}, {"loss", e.loss}, {"mean_uncertainty", e.mean_uncertainty}, {"mean_p", e.mean_p}});
    }
    doc["epochs"] = std::move(epochs);
    doc["enhancement_ran"] = report.enhancement_ran;
    json enh = json::array();
    for (const auto& r : report.enhancements) {
        enh.push_back({{"id", r.instance_id},
                       {"view", r.view},
                       {"trace", r.trace},
                       {"R", r.total_enhanced},
                       {"iterations", r.iterations},
                       {"uncertainty_before", r.uncertainty_before},
                       {"uncertainty_after", r.uncertainty_after}});
    }
    doc["enhancements"] = std::move(enh);
    return doc.dump(2);
}

}  // namespace rsea
