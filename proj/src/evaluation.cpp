#include "rsea/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include <spdlog/fmt/fmt.h>

#include "json.hpp"
#include "rsea/error.hpp"
#include "rsea/graph_data.hpp"

namespace rsea {

EmbeddingMatrix make_embedding(const std::vector<std::vector<double>>& rows) {
    EmbeddingMatrix z;
    z.rows = rows.size();
    z.cols = rows.empty() ? 0 : rows.front().size();
    z.values.reserve(z.rows * z.cols);
    for (const auto& r : rows) {
        if (r.size() != z.cols) throw ShapeError("make_embedding", std::to_string(z.cols), std::to_string(r.size()));
        z.values.insert(z.values.end(), r.begin(), r.end());
    }
    return z;
}

// ---- linear SVM -----------------------------------------------------------------

LinearSvm::LinearSvm(const EmbeddingMatrix& x, std::span<const int> y, int num_classes, std::uint64_t seed,
                     const SvmConfig& cfg) {
    if (x.rows != y.size()) throw ShapeError("linear_svm", std::to_string(x.rows) + " rows", std::to_string(y.size()) + " labels");
    if (x.rows == 0) throw DomainError("linear_svm: empty training set");
    std::vector<int> present;
    for (int label : y) {
        if (label < 0 || label >= num_classes) throw DomainError("linear_svm: label out of range");
        if (std::find(present.begin(), present.end(), label) == present.end()) present.push_back(label);
    }
    if (present.size() < 2) throw DomainError("linear_svm: training set contains a single class");

    const std::size_t n = x.rows, d = x.cols;
    mean_.assign(d, 0.0);
    scale_.assign(d, 1.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < d; ++c) mean_[c] += x.values[i * d + c] / static_cast<double>(n);
    for (std::size_t c = 0; c < d; ++c) {
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) var += std::pow(x.values[i * d + c] - mean_[c], 2) / static_cast<double>(n);
        const double sd = std::sqrt(var);
        scale_[c] = sd > 1e-12 ? sd : 1.0;
    }
    std::vector<double> xs(n * d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < d; ++c) xs[i * d + c] = (x.values[i * d + c] - mean_[c]) / scale_[c];

    const double reg = 1.0 / (cfg.c * static_cast<double>(n));
    weights_.assign(static_cast<std::size_t>(num_classes), std::vector<double>(d + 1, 0.0));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    long long t = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t i : order) {
            ++t;
            const double eta = cfg.learning_rate / std::sqrt(static_cast<double>(t));
            const double* xi = &xs[i * d];
            for (int k = 0; k < num_classes; ++k) {
                auto& w = weights_[static_cast<std::size_t>(k)];
                const double target = y[i] == k ? 1.0 : -1.0;
                double score = w[d];
                for (std::size_t c = 0; c < d; ++c) score += w[c] * xi[c];
                const bool violated = target * score < 1.0;
                for (std::size_t c = 0; c < d; ++c) {
                    w[c] -= eta * (reg * w[c] - (violated ? target * xi[c] : 0.0));
                }
                if (violated) w[d] += eta * target;
            }
        }
    }
    // Classes absent from training can never win.
    for (int k = 0; k < num_classes; ++k) {
        if (std::find(present.begin(), present.end(), k) == present.end()) {
            weights_[static_cast<std::size_t>(k)].assign(d + 1, 0.0);
            weights_[static_cast<std::size_t>(k)][d] = -std::numeric_limits<double>::infinity();
        }
    }
}

int LinearSvm::predict(std::span<const double> x) const {
    const std::size_t d = mean_.size();
    if (x.size() != d) throw ShapeError("LinearSvm::predict", std::to_string(d), std::to_string(x.size()));
    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < weights_.size(); ++k) {
        const auto& w = weights_[k];
        double score = w[d];
        for (std::size_t c = 0; c < d; ++c) score += w[c] * (x[c] - mean_[c]) / scale_[c];
        if (score > best_score) {
            best_score = score;
            best = static_cast<int>(k);
        }
    }
    return best;
}

std::vector<int> LinearSvm::predict(const EmbeddingMatrix& x) const {
    std::vector<int> out;
    out.reserve(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) out.push_back(predict(x.row(i)));
    return out;
}

std::vector<int> linear_svm(const EmbeddingMatrix& train_x, std::span<const int> train_y, int num_classes,
                            const EmbeddingMatrix& test_x, std::uint64_t seed, const SvmConfig& cfg) {
    return LinearSvm(train_x, train_y, num_classes, seed, cfg).predict(test_x);
}

// ---- k-means ---------------------------------------------------------------------

namespace {

double sq_dist(std::span<const double> a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

KMeansResult lloyd(const EmbeddingMatrix& x, int k, std::mt19937_64& rng, int max_iter) {
    const std::size_t n = x.rows;
    KMeansResult r;
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    // k-means++ seeding
    {
        const auto first = x.row(std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
        r.centers.emplace_back(first.begin(), first.end());
    }
    std::vector<double> d2(n);
    while (static_cast<int>(r.centers.size()) < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& c : r.centers) best = std::min(best, sq_dist(x.row(i), c));
            d2[i] = best;
            total += best;
        }
        std::size_t pick = n - 1;
        if (total > 0.0) {
            double target = unit(rng) * total;
            for (std::size_t i = 0; i < n; ++i) {
                target -= d2[i];
                if (target < 0.0) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
        }
        const auto row = x.row(pick);
        r.centers.emplace_back(row.begin(), row.end());
    }

    r.labels.assign(n, -1);
    for (int iter = 0; iter < max_iter; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                const double dist = sq_dist(x.row(i), r.centers[static_cast<std::size_t>(c)]);
                if (dist < best_d) {
                    best_d = dist;
                    best = c;
                }
            }
            if (r.labels[i] != best) {
                r.labels[i] = best;
                changed = true;
            }
        }
        if (!changed) break;
        std::vector<std::vector<double>> sums(static_cast<std::size_t>(k), std::vector<double>(x.cols, 0.0));
        std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = static_cast<std::size_t>(r.labels[i]);
            ++counts[c];
            const auto row = x.row(i);
            for (std::size_t f = 0; f < x.cols; ++f) sums[c][f] += row[f];
        }
        for (std::size_t c = 0; c < counts.size(); ++c) {
            if (counts[c] == 0) continue;  // empty cluster keeps its previous center
            for (std::size_t f = 0; f < x.cols; ++f) r.centers[c][f] = sums[c][f] / static_cast<double>(counts[c]);
        }
    }
    r.inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) r.inertia += sq_dist(x.row(i), r.centers[static_cast<std::size_t>(r.labels[i])]);
    return r;
}

}  // namespace

KMeansResult kmeans(const EmbeddingMatrix& x, int k, std::uint64_t seed, int restarts, int max_iter) {
    if (k < 1) throw DomainError("kmeans: k must be >= 1");
    if (static_cast<std::size_t>(k) > x.rows) {
        throw DomainError("kmeans: k=" + std::to_string(k) + " exceeds " + std::to_string(x.rows) + " points");
    }
    std::mt19937_64 rng(seed);
    KMeansResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (int r = 0; r < std::max(1, restarts); ++r) {
        KMeansResult candidate = lloyd(x, k, rng, max_iter);
        if (candidate.inertia < best.inertia) best = std::move(candidate);
    }
    return best;
}

// ---- metrics -------------------------------------------------------------------------

namespace {

void require_same_length(const char* fn, std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size()) {
        throw ShapeError(fn, std::to_string(a.size()) + " labels", std::to_string(b.size()) + " labels");
    }
}

struct Contingency {
    std::map<std::pair<int, int>, double> joint;
    std::map<int, double> rows, cols;
    double n = 0.0;
};

Contingency contingency(std::span<const int> a, std::span<const int> b) {
    Contingency t;
    for (std::size_t i = 0; i < a.size(); ++i) {
        t.joint[{a[i], b[i]}] += 1.0;
        t.rows[a[i]] += 1.0;
        t.cols[b[i]] += 1.0;
    }
    t.n = static_cast<double>(a.size());
    return t;
}

double comb2(double x) { return x * (x - 1.0) / 2.0; }

}  // namespace

double macro_f1(std::span<const int> y_true, std::span<const int> y_pred, int num_classes) {
    require_same_length("macro_f1", y_true, y_pred);
    double total = 0.0;
    for (int k = 0; k < num_classes; ++k) {
        double tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < y_true.size(); ++i) {
            const bool t = y_true[i] == k, p = y_pred[i] == k;
            tp += t && p;
            fp += !t && p;
            fn += t && !p;
        }
        const double denom = 2 * tp + fp + fn;
        total += denom > 0 ? 2 * tp / denom : 0.0;
    }
    return total / static_cast<double>(num_classes);
}

double micro_f1(std::span<const int> y_true, std::span<const int> y_pred, int num_classes) {
    require_same_length("micro_f1", y_true, y_pred);
    double tp = 0, fp = 0, fn = 0;
    for (int k = 0; k < num_classes; ++k) {
        for (std::size_t i = 0; i < y_true.size(); ++i) {
            const bool t = y_true[i] == k, p = y_pred[i] == k;
            tp += t && p;
            fp += !t && p;
            fn += t && !p;
        }
    }
    const double denom = 2 * tp + fp + fn;
    return denom > 0 ? 2 * tp / denom : 0.0;
}

double nmi(std::span<const int> y_true, std::span<const int> y_clusters) {
    require_same_length("nmi", y_true, y_clusters);
    if (y_true.empty()) return 0.0;
    const Contingency t = contingency(y_true, y_clusters);
    auto entropy = [&t](const std::map<int, double>& marg) {
        double h = 0.0;
        for (const auto& [_, c] : marg) h -= (c / t.n) * std::log(c / t.n);
        return h;
    };
    const double hu = entropy(t.rows), hv = entropy(t.cols);
    double mi = 0.0;
    for (const auto& [key, c] : t.joint) {
        mi += (c / t.n) * std::log(c * t.n / (t.rows.at(key.first) * t.cols.at(key.second)));
    }
    const double denom = 0.5 * (hu + hv);
    if (denom <= 0.0) return 0.0;
    return std::clamp(mi / denom, 0.0, 1.0);
}

double ari(std::span<const int> y_true, std::span<const int> y_clusters) {
    require_same_length("ari", y_true, y_clusters);
    if (y_true.size() < 2) throw DomainError("ari: need at least two points");
    const Contingency t = contingency(y_true, y_clusters);
    double index = 0.0, a = 0.0, b = 0.0;
    for (const auto& [_, c] : t.joint) index += comb2(c);
    for (const auto& [_, c] : t.rows) a += comb2(c);
    for (const auto& [_, c] : t.cols) b += comb2(c);
    // (index - E) / (max - E) with E = a b / C(n,2), max = (a + b) / 2, cleared of
    // fractions so small cases are computed exactly in integers.
    const double pairs = comb2(t.n);
    const double num = 2.0 * (index * pairs - a * b);
    const double den = (a + b) * pairs - 2.0 * a * b;
    if (den == 0.0) return 1.0;
    return num / den;
}

MetricSummary summarize(std::span<const double> values) {
    MetricSummary s;
    if (values.empty()) return s;
    for (double v : values) s.mean += v;
    s.mean /= static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return s;
}

// ---- protocol ---------------------------------------------------------------------------

EvalReport evaluate(const EmbeddingMatrix& z, std::span<const int> labels, int num_classes,
                    std::span<const double> ratios, std::span<const std::uint64_t> seeds) {
    if (z.rows != labels.size()) {
        throw ShapeError("evaluate", std::to_string(z.rows) + " rows", std::to_string(labels.size()) + " labels");
    }
    EvalReport report;
    report.ratios.assign(ratios.begin(), ratios.end());
    for (std::uint64_t seed : seeds) {
        SeedResult sr;
        sr.seed = seed;
        for (double ratio : ratios) {
            const Split split = stratified_split(labels, num_classes, ratio, seed);
            auto take = [&z](const std::vector<std::size_t>& idx) {
                EmbeddingMatrix out;
                out.rows = idx.size();
                out.cols = z.cols;
                for (std::size_t i : idx) {
                    const auto r = z.row(i);
                    out.values.insert(out.values.end(), r.begin(), r.end());
                }
                return out;
            };
            std::vector<int> train_y, test_y;
            for (std::size_t i : split.train) train_y.push_back(labels[i]);
            for (std::size_t i : split.test) test_y.push_back(labels[i]);
            const auto pred = linear_svm(take(split.train), train_y, num_classes, take(split.test), seed);
            sr.ma_f1.push_back(macro_f1(test_y, pred, num_classes));
            sr.mi_f1.push_back(micro_f1(test_y, pred, num_classes));
        }
        const auto clusters = kmeans(z, num_classes, seed);
        sr.nmi = nmi(labels, clusters.labels);
        sr.ari = ari(labels, clusters.labels);
        report.per_seed.push_back(std::move(sr));
    }
    auto collect = [&report](auto get) {
        std::vector<double> v;
        for (const auto& s : report.per_seed) v.push_back(get(s));
        return summarize(v);
    };
    for (std::size_t r = 0; r < ratios.size(); ++r) {
        report.ma_f1.push_back(collect([r](const SeedResult& s) { return s.ma_f1[r]; }));
        report.mi_f1.push_back(collect([r](const SeedResult& s) { return s.mi_f1[r]; }));
    }
    report.nmi = collect([](const SeedResult& s) { return s.nmi; });
    report.ari = collect([](const SeedResult& s) { return s.ari; });
    return report;
}

std::string eval_report_to_json(const EvalReport& report) {
    using json = nlohmann::json;
    auto summary = [](const MetricSummary& m) { return json{{"mean", m.mean}, {"std", m.std}}; };
    json doc;
    doc["ratios"] = report.ratios;
    json seeds = json::array();
    for (const auto& s : report.per_seed) {
        seeds.push_back({{"seed", s.seed}, {"ma_f1", s.ma_f1}, {"mi_f1", s.mi_f1}, {"nmi", s.nmi}, {"ari", s.ari}});
    }
    doc["per_seed"] = std::move(seeds);
    json ma = json::array(), mi = json::array();
    for (std::size_t r = 0; r < report.ratios.size(); ++r) {
        ma.push_back(summary(report.ma_f1[r]));
        mi.push_back(summary(report.mi_f1[r]));
    }
    doc["ma_f1"] = std::move(ma);
    doc["mi_f1"] = std::move(mi);
    doc["nmi"] = summary(report.nmi);
    doc["ari"] = summary(report.ari);
    return doc.dump(2);
}

std::string eval_report_to_csv(const EvalReport& report, const std::string& method) {
    std::ostringstream os;
    os << "method,seed";
    for (double r : report.ratios) os << fmt::format(",Ma-F1@{:g}", r);
    for (double r : report.ratios) os << fmt::format(",Mi-F1@{:g}", r);
    os << ",NMI,ARI\n";
    for (const auto& s : report.per_seed) {
        os << method << ',' << s.seed;
        for (double v : s.ma_f1) os << fmt::format(",{:.6f}", v);
        for (double v : s.mi_f1) os << fmt::format(",{:.6f}", v);
        os << fmt::format(",{:.6f},{:.6f}\n", s.nmi, s.ari);
    }
    auto pm = [](const MetricSummary& m) { return fmt::format(",{:.4f} ± {:.4f}", m.mean, m.std); };
    os << method << ",mean±std";
    for (const auto& m : report.ma_f1) os << pm(m);
    for (const auto& m : report.mi_f1) os << pm(m);
    os << pm(report.nmi) << pm(report.ari) << '\n';
    return os.str();
}

}  // namespace rsea
