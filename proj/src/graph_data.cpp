#include "rsea/graph_data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "rsea/error.hpp"

namespace rsea {

using json = nlohmann::json;

const char* to_string(DatasetErrorKind kind) noexcept {
    switch (kind) {
        case DatasetErrorKind::Parse: return "parse";
        case DatasetErrorKind::Io: return "io";
        case DatasetErrorKind::InconsistentNodes: return "inconsistent-nodes";
        case DatasetErrorKind::InconsistentViews: return "inconsistent-views";
        case DatasetErrorKind::FeatureDimension: return "feature-dimension";
        case DatasetErrorKind::NegativeWeight: return "negative-weight";
        case DatasetErrorKind::NonZeroDiagonal: return "nonzero-diagonal";
        case DatasetErrorKind::NonSquare: return "non-square";
        case DatasetErrorKind::LabelOutOfRange: return "label-out-of-range";
        case DatasetErrorKind::MissingClass: return "missing-class";
        case DatasetErrorKind::Stratification: return "stratification";
    }
    return "unknown";
}

bool GraphView::symmetric() const {
    const std::size_t n = num_nodes();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (adjacency(i, j) != adjacency(j, i)) return false;
    return true;
}

std::vector<int> Dataset::labels() const {
    std::vector<int> out;
    out.reserve(instances.size());
    for (const auto& g : instances) out.push_back(g.label);
    return out;
}

// ---- validation ------------------------------------------------------------

namespace {

void validate_view(const GraphView& v, const std::string& id, std::size_t n, int feature_dim) {
    using K = DatasetErrorKind;
    const Tensor& a = v.adjacency;
    if (a.rank() != 2 || a.shape()[0] != a.shape()[1]) {
        throw DatasetError(K::NonSquare, id, "adjacency shape " + shape_str(a.shape()));
    }
    if (a.shape()[0] != n) {
        throw DatasetError(K::InconsistentNodes, id,
                           "view has " + std::to_string(a.shape()[0]) + " nodes, expected " + std::to_string(n));
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double w = a(i, j);
            if (!std::isfinite(w) || w < 0.0) {
                throw DatasetError(K::NegativeWeight, id,
                                   "adjacency(" + std::to_string(i) + "," + std::to_string(j) + ") = " + std::to_string(w));
            }
        }
        if (a(i, i) != 0.0) throw DatasetError(K::NonZeroDiagonal, id, "adjacency(" + std::to_string(i) + "," + std::to_string(i) + ") != 0");
    }
    const Tensor& f = v.features;
    if (f.rank() != 2 || f.shape()[0] != n) {
        throw DatasetError(K::InconsistentNodes, id, "features shape " + shape_str(f.shape()) + " for " + std::to_string(n) + " nodes");
    }
    if (static_cast<int>(f.shape()[1]) != feature_dim) {
        throw DatasetError(K::FeatureDimension, id,
                           "feature dim " + std::to_string(f.shape()[1]) + ", expected " + std::to_string(feature_dim));
    }
    if (!f.all_finite()) throw DatasetError(K::Parse, id, "non-finite feature value");
}

}  // namespace

void validate(const Dataset& ds) {
    using K = DatasetErrorKind;
    if (ds.num_classes < 1) throw DatasetError(K::Parse, "", "num_classes must be >= 1");
    if (ds.num_views < 1) throw DatasetError(K::Parse, "", "num_views must be >= 1");
    if (ds.feature_dim < 1) throw DatasetError(K::Parse, "", "feature_dim must be >= 1");
    if (ds.instances.empty()) throw DatasetError(K::Parse, "", "dataset has no instances");
    std::vector<bool> seen(static_cast<std::size_t>(ds.num_classes), false);
    for (const auto& g : ds.instances) {
        if (static_cast<int>(g.views.size()) != ds.num_views) {
            throw DatasetError(K::InconsistentViews, g.id,
                               std::to_string(g.views.size()) + " views, expected " + std::to_string(ds.num_views));
        }
        if (g.label < 0 || g.label >= ds.num_classes) {
            throw DatasetError(K::LabelOutOfRange, g.id,
                               "label " + std::to_string(g.label) + " not in [0, " + std::to_string(ds.num_classes) + ")");
        }
        seen[static_cast<std::size_t>(g.label)] = true;
        const auto& a0 = g.views.front().adjacency;
        if (a0.rank() != 2 || a0.shape()[0] == 0) throw DatasetError(K::NonSquare, g.id, "empty adjacency");
        const std::size_t n = a0.shape()[0];
        for (const auto& v : g.views) validate_view(v, g.id, n, ds.feature_dim);
    }
    for (std::size_t k = 0; k < seen.size(); ++k) {
        if (!seen[k]) throw DatasetError(K::MissingClass, "", "class " + std::to_string(k) + " has no instances");
    }
}

// ---- JSON ---------------------------------------------------------------------

namespace {

Tensor matrix_from_json(const json& j, const std::string& id, const char* what) {
    if (!j.is_array()) throw DatasetError(DatasetErrorKind::Parse, id, std::string(what) + " must be an array of rows");
    const std::size_t rows = j.size();
    std::size_t cols = rows ? j.front().size() : 0;
    std::vector<double> values;
    values.reserve(rows * cols);
    for (const auto& row : j) {
        if (!row.is_array()) throw DatasetError(DatasetErrorKind::Parse, id, std::string(what) + " row is not an array");
        if (row.size() != cols) {
            throw DatasetError(std::string(what) == "adjacency" ? DatasetErrorKind::NonSquare : DatasetErrorKind::Parse, id,
                               std::string(what) + " has ragged rows");
        }
        for (const auto& x : row) values.push_back(x.get<double>());
    }
    return Tensor(Shape{rows, cols}, std::move(values));
}

json matrix_to_json(const Tensor& t) {
    json rows = json::array();
    for (std::size_t r = 0; r < t.rows(); ++r) {
        json row = json::array();
        for (std::size_t c = 0; c < t.cols(); ++c) row.push_back(t(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

Dataset parse_dataset(const std::string& json_text) {
    Dataset ds;
    std::string current_id;
    try {
        const json doc = json::parse(json_text);
        ds.num_classes = doc.at("num_classes").get<int>();
        ds.num_views = doc.at("num_views").get<int>();
        ds.feature_dim = doc.at("feature_dim").get<int>();
        for (const auto& ji : doc.at("instances")) {
            MultiViewGraph g;
            g.id = ji.at("id").get<std::string>();
            current_id = g.id;
            g.label = ji.at("label").get<int>();
            for (const auto& jv : ji.at("views")) {
                GraphView v;
                v.adjacency = matrix_from_json(jv.at("adjacency"), g.id, "adjacency");
                v.features = matrix_from_json(jv.at("features"), g.id, "features");
                g.views.push_back(std::move(v));
            }
            if (g.views.empty()) throw DatasetError(DatasetErrorKind::InconsistentViews, g.id, "instance has no views");
            ds.instances.push_back(std::move(g));
            current_id.clear();
        }
    } catch (const json::exception& e) {
        throw DatasetError(DatasetErrorKind::Parse, current_id, e.what());
    }
    validate(ds);
    return ds;
}

Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DatasetError(DatasetErrorKind::Io, "", "cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_dataset(buf.str());
}

std::string dataset_to_json(const Dataset& ds) {
    json doc;
    doc["num_classes"] = ds.num_classes;
    doc["num_views"] = ds.num_views;
    doc["feature_dim"] = ds.feature_dim;
    json instances = json::array();
    for (const auto& g : ds.instances) {
        json ji;
        ji["id"] = g.id;
        ji["label"] = g.label;
        json views = json::array();
        for (const auto& v : g.views) {
            views.push_back(json{{"adjacency", matrix_to_json(v.adjacency)}, {"features", matrix_to_json(v.features)}});
        }
        ji["views"] = std::move(views);
        instances.push_back(std::move(ji));
    }
    doc["instances"] = std::move(instances);
    return doc.dump();
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DatasetError(DatasetErrorKind::Io, "", "cannot write " + path.string());
    out << dataset_to_json(ds) << '\n';
}

// ---- synthetic generator -------------------------------------------------------

void validate(const SyntheticConfig& cfg) {
    auto fail = [](const std::string& m) { throw ConfigError("synthetic config: " + m); };
    if (cfg.num_classes < 2) fail("num_classes must be >= 2");
    if (cfg.num_instances < cfg.num_classes) fail("num_instances must be >= num_classes");
    if (cfg.num_views < 1) fail("num_views must be >= 1");
    if (cfg.num_nodes < 1) fail("num_nodes must be >= 1");
    if (cfg.feature_dim < cfg.num_classes) fail("feature_dim must be >= num_classes (one-hot community features)");
    if (!(cfg.p_out >= 0.0 && cfg.p_out < cfg.p_in && cfg.p_in <= 1.0)) fail("require 0 <= p_out < p_in <= 1");
    if (!(cfg.feature_noise_sigma >= 0.0)) fail("feature_noise_sigma must be >= 0");
    for (int v : cfg.noise_views) {
        if (v < 0 || v >= cfg.num_views) fail("noise view " + std::to_string(v) + " out of range");
    }
}

namespace {

double edge_weight(std::mt19937_64& rng) {
    // (0, 1]
    return 1.0 - std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

GraphView informative_view(const SyntheticConfig& cfg, int label, std::mt19937_64& rng) {
    const auto n = static_cast<std::size_t>(cfg.num_nodes);
    const auto communities = static_cast<std::size_t>(label + 1);
    std::vector<std::size_t> community(n);
    for (std::size_t k = 0; k < n; ++k) community[k] = k * communities / n;

    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 1.0);
    GraphView v{Tensor(Shape{n, n}), Tensor(Shape{n, static_cast<std::size_t>(cfg.feature_dim)})};
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double p = community[i] == community[j] ? cfg.p_in : cfg.p_out;
            if (coin(rng) < p) {
                const double w = edge_weight(rng);
                v.adjacency(i, j) = w;
                v.adjacency(j, i) = w;
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t d = 0; d < v.features.cols(); ++d) {
            const double base = d == community[i] ? 1.0 : 0.0;
            v.features(i, d) = base + cfg.feature_noise_sigma * noise(rng);
        }
    }
    return v;
}

GraphView noise_view(const SyntheticConfig& cfg, std::mt19937_64& rng) {
    const auto n = static_cast<std::size_t>(cfg.num_nodes);
    const double p = 0.5 * (cfg.p_in + cfg.p_out);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 1.0);
    GraphView v{Tensor(Shape{n, n}), Tensor(Shape{n, static_cast<std::size_t>(cfg.feature_dim)})};
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (coin(rng) < p) {
                const double w = edge_weight(rng);
                v.adjacency(i, j) = w;
                v.adjacency(j, i) = w;
            }
        }
    }
    for (auto& x : v.features.values()) x = cfg.feature_noise_sigma * noise(rng);
    return v;
}

}  // namespace

Dataset generate_synthetic(const SyntheticConfig& cfg, std::uint64_t seed) {
    validate(cfg);
    std::mt19937_64 rng(seed);
    Dataset ds;
    ds.num_classes = cfg.num_classes;
    ds.num_views = cfg.num_views;
    ds.feature_dim = cfg.feature_dim;
    ds.instances.reserve(static_cast<std::size_t>(cfg.num_instances));
    for (int i = 0; i < cfg.num_instances; ++i) {
        MultiViewGraph g;
        g.id = "g" + std::to_string(i);
        g.label = i % cfg.num_classes;
        for (int j = 0; j < cfg.num_views; ++j) {
            if (cfg.duplicate_view && j > 0) {
                g.views.push_back(g.views.front());
            } else if (cfg.noise_views.contains(j)) {
                g.views.push_back(noise_view(cfg, rng));
            } else {
                g.views.push_back(informative_view(cfg, g.label, rng));
            }
        }
        ds.instances.push_back(std::move(g));
    }
    return ds;
}

// ---- splits ---------------------------------------------------------------------

Split stratified_split(std::span<const int> labels, int num_classes, double train_ratio, std::uint64_t seed) {
    if (!(train_ratio > 0.0 && train_ratio < 1.0)) throw ConfigError("train_ratio must lie in (0, 1)");
    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(num_classes));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= num_classes) {
            throw DatasetError(DatasetErrorKind::LabelOutOfRange, "", "label " + std::to_string(labels[i]));
        }
        by_class[static_cast<std::size_t>(labels[i])].push_back(i);
    }
    std::mt19937_64 rng(seed);
    Split split;
    split.train_ratio = train_ratio;
    for (std::size_t k = 0; k < by_class.size(); ++k) {
        auto& members = by_class[k];
        if (members.empty()) continue;
        if (members.size() < 2) {
            throw DatasetError(DatasetErrorKind::Stratification, "",
                               "class " + std::to_string(k) + " has a single instance; cannot stratify");
        }
        std::shuffle(members.begin(), members.end(), rng);
        const auto n = static_cast<long long>(members.size());
        const long long take = std::clamp(std::llround(train_ratio * static_cast<double>(n)), 1LL, n - 1);
        split.train.insert(split.train.end(), members.begin(), members.begin() + take);
        split.test.insert(split.test.end(), members.begin() + take, members.end());
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

Split make_split(const Dataset& ds, double train_ratio, std::uint64_t seed) {
    const auto labels = ds.labels();
    return stratified_split(labels, ds.num_classes, train_ratio, seed);
}

}  // namespace rsea
