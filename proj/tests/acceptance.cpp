// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "fixtures.hpp"
#include "rsea/enhancement.hpp"
#include "rsea/evaluation.hpp"
#include "rsea/graph_data.hpp"
#include "rsea/model.hpp"
#include "rsea/subjective_logic.hpp"
#include "rsea/training.hpp"

using namespace rsea;

namespace {

// Tolerances and budgets.
constexpr double kSimplexTol = 1e-9;
constexpr double kGradStep = 1e-5;
constexpr double kGradRelTol = 1e-3;
constexpr double kGradFloor = 1e-6;  // denominators below this compare absolutely
constexpr double kLossTol = 1e-9;
constexpr double kIndependentAriTol = 0.05;
constexpr int kDiscriminationRuns = 20;
constexpr int kDiscriminationNeeded = 18;
constexpr double kAblationSlack = 0.01;  // one F1 point
constexpr double kReductionShare = 0.90;
constexpr double kSeparableMiF1 = 0.95;

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, double budget_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (budget_s > 0 && secs > budget_s) {
        o.pass = false;
        o.detail += " [over budget]";
    }
    if (!o.pass) ++failures;
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(2);
    os << (o.pass ? "PASS" : "FAIL") << "  criterion " << id << "  " << name << "  (" << secs << " s)  " << o.detail;
    std::cout << os.str() << std::endl;
}

std::string fmt_double(double v, int precision = 4) {
    std::ostringstream os;
    os.precision(precision);
    os << v;
    return os.str();
}

// ---- shared experiment plumbing ----

SyntheticConfig view_quality_config() {
    SyntheticConfig c;
    c.num_instances = 120;
    c.num_classes = 2;
    c.num_views = 2;
    c.num_nodes = 20;
    c.feature_dim = 8;
    c.p_in = 0.9;
    c.p_out = 0.1;
    c.noise_views = {1};
    return c;
}

SyntheticConfig separable_config() {
    SyntheticConfig c = view_quality_config();
    c.p_in = 1.0;
    c.p_out = 0.0;
    c.feature_noise_sigma = 0.0;
    c.noise_views = {};
    return c;
}

struct Run {
    ModelConfig model;
    TrainConfig train;
    TrainResult result;
};

Run train_run(const Dataset& ds, std::uint64_t seed, bool enhance, bool reliable) {
    Run run;
    run.model.layer_dims = {static_cast<std::size_t>(ds.feature_dim), 32, 16};
    run.model.num_views = static_cast<std::size_t>(ds.num_views);
    run.model.num_classes = static_cast<std::size_t>(ds.num_classes);
    run.model.seed = seed;
    run.train.seed = seed;
    run.train.enhancement_enabled = enhance;
    run.train.reliable_aggregation_enabled = reliable;
    const Split split = make_split(ds, 0.6, seed);
    run.result = train(ds, split, run.model, run.train);
    return run;
}

EmbeddingMatrix embeddings(const Run& run) {
    std::vector<std::vector<double>> rows;
    for (const auto& g : run.result.dataset.instances) {
        rows.push_back(embed(g, run.result.params, run.model, forward_options(run.train)));
    }
    return make_embedding(rows);
}

/// Mean aggregation parameter per layer and view over every instance, final weights.
std::vector<std::vector<double>> mean_p(const Run& run) {
    const std::size_t V = run.model.num_views, L = run.model.num_layers();
    std::vector<std::vector<double>> acc(L, std::vector<double>(V, 0.0));
    const double m = static_cast<double>(run.result.dataset.instances.size());
    for (const auto& g : run.result.dataset.instances) {
        Tape tape;
        const BoundParams bound = bind_frozen(tape, run.result.params);
        const ForwardTrace tr = model_forward(tape, g, bound, run.model, forward_options(run.train));
        for (std::size_t l = 0; l < L; ++l)
            for (std::size_t j = 0; j < V; ++j) acc[l][j] += tr.layers[l].p[j] / m;
    }
    return acc;
}

double test_mi_f1(const Run& run, double ratio) {
    const std::vector<double> ratios{ratio};
    std::vector<std::uint64_t> seeds(10);
    for (std::uint64_t s = 0; s < 10; ++s) seeds[s] = s;
    const auto labels = run.result.dataset.labels();
    const EvalReport rep = evaluate(embeddings(run), labels, run.result.dataset.num_classes, ratios, seeds);
    return rep.mi_f1.front().mean;
}

// ---- criteria ----

Outcome subjective_logic_exactness() {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> k_dist(2, 10);
    std::exponential_distribution<double> evidence(0.1);
    std::bernoulli_distribution zero(0.2);
    double worst = 0.0;
    int inexact = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int k = k_dist(rng);
        std::vector<double> e(static_cast<std::size_t>(k));
        for (double& v : e) v = zero(rng) ? 0.0 : evidence(rng);
        const Opinion op = evidence_to_opinion(e);
        double s = 0.0;
        for (double v : e) s += v + 1.0;
        double total = op.uncertainty;
        for (double b : op.belief) total += b;
        worst = std::max(worst, std::abs(total - 1.0));
        if (op.uncertainty != static_cast<double>(k) / s) ++inexact;
    }
    return {worst < kSimplexTol && inexact == 0,
            "max |sum b + u - 1| = " + fmt_double(worst, 3) + ", u != K/S in " + std::to_string(inexact) + "/1000"};
}

Outcome gradient_correctness() {
    ModelConfig cfg;
    cfg.layer_dims = {4, 5, 3};
    cfg.num_views = 2;
    cfg.num_classes = 2;
    cfg.seed = 11;
    cfg.aggregation_gradient = true;
    std::mt19937_64 rng(5);
    MultiViewGraph g{"fd", 1, {test::random_view(6, 4, 0.6, rng), test::random_view(6, 4, 0.6, rng)}};
    const auto y = one_hot(g.label, cfg.num_classes);
    const double lambda = 1e-3;

    ModelParams params = init_params(cfg);
    auto loss_at = [&](ModelParams& p) {
        Tape tape;
        const BoundParams b = bind_frozen(tape, p);
        const ForwardTrace tr = model_forward(tape, g, b, cfg);
        return total_loss(tr, y, b, lambda).item();
    };

    params.zero_grad();
    {
        Tape tape;
        const BoundParams b = bind_trainable(tape, params);
        const ForwardTrace tr = model_forward(tape, g, b, cfg);
        tape.backward(total_loss(tr, y, b, lambda));
    }
    double worst = 0.0;
    std::size_t checked = 0, nonzero = 0;
    for (Tensor* w : params.all()) {
        for (std::size_t i = 0; i < w->numel(); ++i) {
            const double orig = (*w)[i];
            (*w)[i] = orig + kGradStep;
            const double up = loss_at(params);
            (*w)[i] = orig - kGradStep;
            const double down = loss_at(params);
            (*w)[i] = orig;
            const double fd = (up - down) / (2.0 * kGradStep);
            const double an = w->grad()[i];
            const double denom = std::max({std::abs(fd), std::abs(an), kGradFloor});
            worst = std::max(worst, std::abs(fd - an) / denom);
            ++checked;
            nonzero += an != 0.0;
        }
    }
    return {worst < kGradRelTol, "max relative error " + fmt_double(worst, 3) + " over " + std::to_string(checked) +
                                     " entries (" + std::to_string(nonzero) + " nonzero)"};
}

Outcome algorithm_semantics() {
    const test::HandTrace ht;
    std::size_t call = 0;
    bool adjacency_ok = true;
    const EnhancementOutcome out = reliable_enhance(ht.view, [&](const Tensor& a) {
        if (call >= ht.script.size() || !(a == ht.expected_adjacency(ht.enhanced_before_call[call]))) adjacency_ok = false;
        return ht.script.at(std::min(call++, ht.script.size() - 1));
    });
    const bool hand_ok = adjacency_ok && out.uncertainty_trace == ht.expected_trace && out.total_enhanced == ht.expected_r &&
                         out.iterations == ht.expected_iterations && out.order == ht.expected_order &&
                         out.enhanced_adjacency == ht.expected_adjacency(ht.expected_order);

    std::mt19937_64 rng(77);
    std::uniform_int_distribution<std::size_t> n_dist(1, 60);
    std::uniform_real_distribution<double> u_dist(0.0, 1.0);
    int monotone_violations = 0, loop_violations = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = n_dist(rng);
        const GraphView v = test::random_view(n, 5, 0.3, rng);
        std::mt19937_64 probe_rng(static_cast<std::uint64_t>(trial));
        const EnhancementOutcome o = reliable_enhance(v, [&probe_rng, &u_dist](const Tensor&) { return u_dist(probe_rng); });
        for (std::size_t i = 1; i < o.uncertainty_trace.size(); ++i)
            monotone_violations += o.uncertainty_trace[i] > o.uncertainty_trace[i - 1];
        const std::size_t t = batch_size_for(n);
        loop_violations += o.iterations > (n + t - 1) / t + 1 || o.total_enhanced > n;
    }
    return {hand_ok && monotone_violations == 0 && loop_violations == 0,
            std::string("hand trace ") + (hand_ok ? "matches" : "differs") + ", monotonicity violations " +
                std::to_string(monotone_violations) + ", loop-bound violations " + std::to_string(loop_violations)};
}

Outcome loss_identities() {
    const std::vector<double> y{1.0, 0.0};
    const std::vector<std::pair<std::vector<double>, double>> cases{{{1, 1}, 1.0}, {{2, 1}, 0.5}, {{10, 1}, 0.1}};
    double worst = 0.0;
    for (const auto& [alpha, expected] : cases) {
        const double s = alpha[0] + alpha[1];
        worst = std::max(worst, std::abs(ace_loss(DirichletParams{alpha, s}, y) - expected));
    }
    return {worst < kLossTol, "max error " + fmt_double(worst, 3)};
}

Outcome metric_oracles() {
    const std::vector<int> a{0, 0, 1, 1}, b{0, 1, 0, 1};
    const double ari_val = ari(a, b);
    const std::vector<int> p1{0, 0, 1, 1, 2, 2}, p2{2, 2, 0, 0, 1, 1};
    const double nmi_val = nmi(p1, p2);
    const std::vector<int> t{0, 0, 1, 1}, pred{0, 0, 0, 0};
    const double f1 = macro_f1(t, pred, 2);
    double mean_abs = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<int> lab(0, 3);  // K = 4
        std::vector<int> x(1000), z(1000);
        for (auto& v : x) v = lab(rng);
        for (auto& v : z) v = lab(rng);
        mean_abs += std::abs(ari(x, z)) / 100.0;
    }
    const bool ok = ari_val == -0.5 && std::abs(nmi_val - 1.0) < 1e-12 && std::abs(f1 - 1.0 / 3.0) < 1e-12 &&
                    mean_abs < kIndependentAriTol;
    return {ok, "ARI " + fmt_double(ari_val) + ", NMI " + fmt_double(nmi_val, 12) + ", macro-F1 " + fmt_double(f1) +
                    ", mean |ARI| independent " + fmt_double(mean_abs, 3)};
}

struct DiscriminationData {
    int wins = 0;
    int all_layer_wins = 0;
    std::size_t reduced = 0, instances = 0;
    double worst_run_share = 1.0;
    std::string p_summary;
};

DiscriminationData run_discrimination() {
    DiscriminationData d;
    for (int s = 0; s < kDiscriminationRuns; ++s) {
        const auto seed = static_cast<std::uint64_t>(s);
        const Dataset ds = generate_synthetic(view_quality_config(), seed);
        const Run run = train_run(ds, seed, true, true);
        // Only first-layer channels are still single views; deeper channels are
        // W_inter mixtures of all views, so view quality is read at layer 1.
        const auto p = mean_p(run);
        d.wins += p[0][0] > p[0][1];
        d.p_summary += (s ? " " : "") + fmt_double(p[0][0], 3) + "/" + fmt_double(p[0][1], 3);
        double all0 = 0.0, all1 = 0.0;
        for (const auto& layer : p) {
            all0 += layer[0];
            all1 += layer[1];
        }
        d.all_layer_wins += all0 > all1;

        // Per-instance mean uncertainty over views, before vs after enhancement.
        const auto& recs = run.result.report.enhancements;
        std::size_t reduced = 0, n = 0;
        for (std::size_t i = 0; i < recs.size(); i += ds.num_views) {
            double before = 0.0, after = 0.0;
            for (int j = 0; j < ds.num_views; ++j) {
                before += recs[i + static_cast<std::size_t>(j)].uncertainty_before;
                after += recs[i + static_cast<std::size_t>(j)].uncertainty_after;
            }
            reduced += after < before;
            ++n;
        }
        d.reduced += reduced;
        d.instances += n;
        d.worst_run_share = std::min(d.worst_run_share, static_cast<double>(reduced) / static_cast<double>(n));
    }
    return d;
}

Outcome ablation_ordering() {
    double full = 0.0, no_enh = 0.0, no_rel = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Dataset ds = generate_synthetic(view_quality_config(), seed);
        full += test_mi_f1(train_run(ds, seed, true, true), 0.6) / 5.0;
        no_enh += test_mi_f1(train_run(ds, seed, false, true), 0.6) / 5.0;
        no_rel += test_mi_f1(train_run(ds, seed, true, false), 0.6) / 5.0;
    }
    const bool ok = full >= no_enh - kAblationSlack && full >= no_rel - kAblationSlack;
    return {ok, "Mi-F1 full " + fmt_double(full) + ", RSEA-1 " + fmt_double(no_enh) + ", RSEA-2 " + fmt_double(no_rel)};
}

Outcome separable_sanity() {
    const Dataset ds = generate_synthetic(separable_config(), 0);
    const double mi = test_mi_f1(train_run(ds, 0, true, true), 0.6);
    return {mi >= kSeparableMiF1, "test Mi-F1 @0.6 = " + fmt_double(mi)};
}

Outcome public_smoke() {
    const char* path = std::getenv("RSEA_PUBLIC_DATASET");
    Dataset ds;
    std::string source;
    if (path && *path) {
        ds = load_dataset(path);
        source = path;
    } else {
        SyntheticConfig c;
        c.num_instances = 60;
        c.duplicate_view = true;
        ds = generate_synthetic(c, 3);
        source = "stand-in two-view copy of a single-view synthetic set (RSEA_PUBLIC_DATASET not set)";
    }
    const Run run = train_run(ds, 0, true, true);
    std::vector<std::uint64_t> seeds(10);
    for (std::uint64_t s = 0; s < 10; ++s) seeds[s] = s;
    const std::vector<double> ratios{0.2, 0.6};
    const EvalReport rep = evaluate(embeddings(run), run.result.dataset.labels(), ds.num_classes, ratios, seeds);
    const std::string csv = eval_report_to_csv(rep);
    const std::string header = csv.substr(0, csv.find('\n'));
    const bool ok = header == "method,seed,Ma-F1@0.2,Ma-F1@0.6,Mi-F1@0.2,Mi-F1@0.6,NMI,ARI" &&
                    std::count(csv.begin(), csv.end(), '\n') == 12;
    return {ok, "trained " + std::to_string(run.result.report.epochs.size()) + " epochs without divergence on " + source};
}

}  // namespace

int main() {
    spdlog::set_level(spdlog::level::warn);

    report(1, "subjective-logic exactness", 1.0, subjective_logic_exactness);
    report(2, "gradient correctness", 30.0, gradient_correctness);
    report(3, "enhancement loop semantics", 10.0, algorithm_semantics);
    report(4, "evidential loss identities", 0.0, loss_identities);
    report(5, "metric oracles", 0.0, metric_oracles);

    DiscriminationData disc;
    report(6, "view-quality discrimination", 20 * 60.0, [&disc] {
        disc = run_discrimination();
        return Outcome{disc.wins >= kDiscriminationNeeded,
                       std::to_string(disc.wins) + "/" + std::to_string(kDiscriminationRuns) +
                           " runs with layer-1 p(view0) > p(view1) (layer-averaged: " +
                           std::to_string(disc.all_layer_wins) + "/" + std::to_string(kDiscriminationRuns) +
                           "); layer-1 p per run: " + disc.p_summary};
    });
    report(7, "ablation ordering", 45 * 60.0, ablation_ordering);
    report(8, "uncertainty reduction by enhancement", 0.0, [&disc] {
        if (disc.instances == 0) return Outcome{false, "no enhancement records"};
        const double share = static_cast<double>(disc.reduced) / static_cast<double>(disc.instances);
        return Outcome{share >= kReductionShare, std::to_string(disc.reduced) + "/" + std::to_string(disc.instances) +
                                                     " instances reduced (" + fmt_double(share) +
                                                     "), worst run " + fmt_double(disc.worst_run_share)};
    });
    report(9, "separable end-to-end sanity", 5 * 60.0, separable_sanity);
    report(10, "public-data smoke run", 0.0, public_smoke);

    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
