#include "rsea/model.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "rsea/error.hpp"

namespace rsea {

using json = nlohmann::json;

void validate(const ModelConfig& cfg) {
    if (cfg.layer_dims.size() < 2) throw ConfigError("model config: need at least one layer (layer_dims length >= 2)");
    for (auto d : cfg.layer_dims)
        if (d < 1) throw ConfigError("model config: layer dims must be >= 1");
    if (cfg.num_views < 1) throw ConfigError("model config: num_views must be >= 1");
    if (cfg.num_classes < 1) throw ConfigError("model config: num_classes must be >= 1");
}

// ---- parameters ------------------------------------------------------------

std::vector<Tensor*> ModelParams::layer(std::size_t l) {
    std::vector<Tensor*> out;
    for (auto& w : intra[l]) out.push_back(&w);
    for (auto& w : fnn[l]) out.push_back(&w);
    out.push_back(&fnn_fused[l]);
    out.push_back(&inter[l]);
    return out;
}

std::vector<const Tensor*> ModelParams::layer(std::size_t l) const {
    std::vector<const Tensor*> out;
    for (const auto& w : intra[l]) out.push_back(&w);
    for (const auto& w : fnn[l]) out.push_back(&w);
    out.push_back(&fnn_fused[l]);
    out.push_back(&inter[l]);
    return out;
}

std::vector<Tensor*> ModelParams::all() {
    std::vector<Tensor*> out;
    for (std::size_t l = 0; l < inter.size(); ++l) {
        auto part = layer(l);
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

std::vector<const Tensor*> ModelParams::all() const {
    std::vector<const Tensor*> out;
    for (std::size_t l = 0; l < inter.size(); ++l) {
        auto part = layer(l);
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

std::size_t ModelParams::count() const {
    std::size_t n = 0;
    for (const Tensor* t : all()) n += t->numel();
    return n;
}

void ModelParams::zero_grad() {
    for (Tensor* t : all()) t->zero_grad();
}

namespace {

Tensor glorot(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Tensor t(Shape{fan_in, fan_out});
    for (auto& v : t.values()) v = dist(rng);
    return t;
}

}  // namespace

ModelParams init_params(const ModelConfig& cfg) {
    validate(cfg);
    std::mt19937_64 rng(cfg.seed);
    const std::size_t L = cfg.num_layers(), V = cfg.num_views, K = cfg.num_classes;
    ModelParams p;
    p.intra.resize(L);
    p.fnn.resize(L);
    for (std::size_t l = 0; l < L; ++l) {
        const std::size_t din = cfg.layer_dims[l], dout = cfg.layer_dims[l + 1];
        for (std::size_t j = 0; j < V; ++j) p.intra[l].push_back(glorot(din, dout, rng));
        for (std::size_t j = 0; j < V; ++j) p.fnn[l].push_back(glorot(dout, K, rng));
        p.fnn_fused.push_back(glorot(dout, K, rng));
        p.inter.push_back(glorot(V, V, rng));
    }
    return p;
}

std::vector<Var> BoundParams::layer(std::size_t l) const {
    std::vector<Var> out(intra[l].begin(), intra[l].end());
    out.insert(out.end(), fnn[l].begin(), fnn[l].end());
    out.push_back(fnn_fused[l]);
    out.push_back(inter[l]);
    return out;
}

namespace {

template <class Params, class Bind>
BoundParams bind_with(Params& params, Bind bind) {
    BoundParams b;
    for (auto& layer : params.intra) {
        auto& dst = b.intra.emplace_back();
        for (auto& w : layer) dst.push_back(bind(w));
    }
    for (auto& layer : params.fnn) {
        auto& dst = b.fnn.emplace_back();
        for (auto& w : layer) dst.push_back(bind(w));
    }
    for (auto& w : params.fnn_fused) b.fnn_fused.push_back(bind(w));
    for (auto& w : params.inter) b.inter.push_back(bind(w));
    return b;
}

}  // namespace

BoundParams bind_trainable(Tape& tape, ModelParams& params) {
    return bind_with(params, [&tape](Tensor& w) { return tape.param(w); });
}

BoundParams bind_frozen(Tape& tape, const ModelParams& params) {
    return bind_with(params, [&tape](const Tensor& w) { return tape.constant(w); });
}

// ---- forward ------------------------------------------------------------------

namespace {

DirichletParams dirichlet_of(Var alpha) {
    DirichletParams d{alpha.value().data(), 0.0};
    for (double a : d.alpha) d.strength += a;
    return d;
}

}  // namespace

Var intra_forward(Var adjacency, Var features, Var weight) {
    return relu(matmul(adjacency, matmul(features, weight)));
}

Var view_evidence(Var features, Var head) { return mean_axis(softplus(matmul(features, head)), 0); }

std::vector<double> aggregation_params(std::span<const Opinion> opinions) {
    std::vector<double> p;
    p.reserve(opinions.size());
    for (const auto& op : opinions) p.push_back(aggregation_param(op));
    return p;
}

Var aggregation_param(Var alpha) {
    const auto k = static_cast<double>(alpha.value().numel());
    Var inv_strength = reciprocal(sum(alpha));
    Var belief = scale_by(add_scalar(alpha, -1.0), inv_strength);
    Var uncertainty = scale(inv_strength, k);
    return div(row_variance(belief), uncertainty);
}

std::vector<Var> inter_forward(std::span<const Var> view_features, Var p, Var mixing) {
    const std::size_t V = view_features.size();
    if (p.value().numel() != V) throw ShapeError("inter_forward", shape_str(p.shape()), "[" + std::to_string(V) + "]");
    if (mixing.shape() != Shape{V, V}) throw ShapeError("inter_forward", shape_str(mixing.shape()), "[VxV]");
    const Shape block = view_features.front().shape();
    // Rows index (node, feature); columns index views.
    Var stacked = stack_columns(view_features);
    Var weighted = mul(stacked, reshape(p, Shape{V}));
    Var mixed = relu(matmul(weighted, mixing));
    std::vector<Var> out;
    out.reserve(V);
    for (std::size_t j = 0; j < V; ++j) out.push_back(column(mixed, j, block));
    return out;
}

Var readout(std::span<const Var> final_features) {
    const Shape block = final_features.front().shape();
    Var view_mean = reshape(mean_axis(stack_columns(final_features), 1), block);
    return mean_axis(view_mean, 0);
}

ForwardTrace model_forward(Tape& tape, const MultiViewGraph& g, const BoundParams& params, const ModelConfig& cfg,
                           const ForwardOptions& opts) {
    const std::size_t V = cfg.num_views, L = cfg.num_layers();
    if (g.views.size() != V) {
        throw ShapeError("model_forward", std::to_string(g.views.size()) + " views", std::to_string(V) + " views");
    }
    std::vector<Var> adjacency, features;
    for (const auto& v : g.views) {
        if (v.feature_dim() != cfg.layer_dims.front()) {
            throw ShapeError("model_forward", shape_str(v.features.shape()), "D=" + std::to_string(cfg.layer_dims.front()));
        }
        adjacency.push_back(tape.constant(v.adjacency));
        features.push_back(tape.constant(v.features));
    }

    ForwardTrace trace;
    for (std::size_t l = 0; l < L; ++l) {
        LayerTrace& lt = trace.layers.emplace_back();
        for (std::size_t j = 0; j < V; ++j) {
            Var fs = intra_forward(adjacency[j], features[j], params.intra[l][j]);
            Var alpha = add_scalar(view_evidence(fs, params.fnn[l][j]), 1.0);
            lt.view_features.push_back(fs);
            lt.view_alpha.push_back(alpha);
            lt.opinions.push_back(alpha_to_opinion(dirichlet_of(alpha)));
        }

        Var p;
        if (!opts.reliable_aggregation) {
            lt.p.assign(V, 1.0);
            p = tape.constant(Tensor::vector(lt.p));
        } else if (opts.fixed_p) {
            lt.p = opts.fixed_p->at(l);
            p = tape.constant(Tensor::vector(lt.p));
        } else if (cfg.aggregation_gradient) {
            std::vector<Var> parts;
            for (Var alpha : lt.view_alpha) parts.push_back(aggregation_param(alpha));
            p = reshape(stack_columns(parts), Shape{V});
            lt.p = p.value().data();
        } else {
            lt.p = aggregation_params(lt.opinions);
            p = tape.constant(Tensor::vector(lt.p));
        }

        lt.mixed_features = inter_forward(lt.view_features, p, params.inter[l]);
        const Shape block = lt.mixed_features.front().shape();
        Var fused = reshape(mean_axis(stack_columns(lt.mixed_features), 1), block);
        lt.fused_alpha = add_scalar(view_evidence(fused, params.fnn_fused[l]), 1.0);
        features = lt.mixed_features;
    }
    trace.embedding = readout(features);
    return trace;
}

std::vector<double> embed(const MultiViewGraph& g, const ModelParams& params, const ModelConfig& cfg,
                          const ForwardOptions& opts) {
    Tape tape;
    const BoundParams bound = bind_frozen(tape, params);
    return model_forward(tape, g, bound, cfg, opts).embedding.value().data();
}

double view_uncertainty(const Tensor& adjacency, const Tensor& features, const ModelParams& params,
                        std::size_t view) {
    Tensor hidden = matmul(adjacency, matmul(features, params.intra.at(0).at(view)));
    for (auto& v : hidden.values()) v = v > 0.0 ? v : 0.0;
    const Tensor logits = matmul(hidden, params.fnn.at(0).at(view));
    const std::size_t n = logits.rows(), k = logits.cols();
    double strength = static_cast<double>(k);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < k; ++c) strength += softplus(logits(i, c)) / static_cast<double>(n);
    return static_cast<double>(k) / strength;
}

UncertaintyProbe make_probe(const ModelParams& params, const Tensor& features, std::size_t view) {
    return [&params, features, view](const Tensor& adjacency) {
        return view_uncertainty(adjacency, features, params, view);
    };
}

// ---- checkpoint ------------------------------------------------------------------

std::string checkpoint_to_json(const Checkpoint& ckpt) {
    json doc;
    doc["format"] = "rsea-checkpoint";
    doc["version"] = 1;
    doc["config"] = {
        {"layer_dims", ckpt.config.layer_dims},
        {"num_views", ckpt.config.num_views},
        {"num_classes", ckpt.config.num_classes},
        {"activation", "relu"},
        {"seed", ckpt.config.seed},
        {"aggregation_gradient", ckpt.config.aggregation_gradient},
    };
    doc["reliable_aggregation"] = ckpt.reliable_aggregation;
    json shapes = json::array();
    std::vector<double> flat;
    for (const Tensor* t : ckpt.params.all()) {
        shapes.push_back(t->shape());
        flat.insert(flat.end(), t->values().begin(), t->values().end());
    }
    doc["shapes"] = std::move(shapes);
    doc["params"] = std::move(flat);
    return doc.dump();
}

Checkpoint checkpoint_from_json(const std::string& text) {
    Checkpoint ckpt;
    try {
        const json doc = json::parse(text);
        if (doc.at("format").get<std::string>() != "rsea-checkpoint") throw ConfigError("checkpoint: unknown format");
        const json& c = doc.at("config");
        ckpt.config.layer_dims = c.at("layer_dims").get<std::vector<std::size_t>>();
        ckpt.config.num_views = c.at("num_views").get<std::size_t>();
        ckpt.config.num_classes = c.at("num_classes").get<std::size_t>();
        if (c.at("activation").get<std::string>() != "relu") throw ConfigError("checkpoint: unsupported activation");
        ckpt.config.seed = c.at("seed").get<std::uint64_t>();
        ckpt.config.aggregation_gradient = c.at("aggregation_gradient").get<bool>();
        ckpt.reliable_aggregation = doc.at("reliable_aggregation").get<bool>();
        ckpt.params = init_params(ckpt.config);
        const auto flat = doc.at("params").get<std::vector<double>>();
        const auto shapes = doc.at("shapes").get<std::vector<Shape>>();
        auto slots = ckpt.params.all();
        if (shapes.size() != slots.size()) throw ConfigError("checkpoint: parameter count does not match config");
        std::size_t offset = 0;
        for (std::size_t i = 0; i < slots.size(); ++i) {
            if (shapes[i] != slots[i]->shape()) {
                throw ConfigError("checkpoint: shape " + shape_str(shapes[i]) + " does not match " + shape_str(slots[i]->shape()));
            }
            auto dst = slots[i]->values();
            if (offset + dst.size() > flat.size()) throw ConfigError("checkpoint: truncated parameter array");
            for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = flat[offset + k];
            offset += dst.size();
        }
        if (offset != flat.size()) throw ConfigError("checkpoint: trailing parameter values");
    } catch (const json::exception& e) {
        throw ConfigError(std::string("checkpoint: ") + e.what());
    }
    return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write checkpoint " + path.string());
    out << checkpoint_to_json(ckpt) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open checkpoint " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return checkpoint_from_json(buf.str());
}

}  // namespace rsea
