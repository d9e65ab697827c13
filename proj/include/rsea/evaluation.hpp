#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace rsea {

/// Row-major embedding matrix, one row per instance.
struct EmbeddingMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    std::span<const double> row(std::size_t i) const { return std::span<const double>(values).subspan(i * cols, cols); }
};

EmbeddingMatrix make_embedding(const std::vector<std::vector<double>>& rows);

struct SvmConfig {
    double c = 1.0;
    int epochs = 200;
    double learning_rate = 0.01;  // step at update t is learning_rate / sqrt(t)
};

/// One-vs-rest linear SVM trained by SGD on the L2-regularized hinge loss over
/// standardized features (statistics from the training set only).
class LinearSvm {
public:
    LinearSvm(const EmbeddingMatrix& x, std::span<const int> y, int num_classes, std::uint64_t seed,
              const SvmConfig& cfg = {});
    int predict(std::span<const double> x) const;
    std::vector<int> predict(const EmbeddingMatrix& x) const;

private:
    std::vector<double> mean_, scale_;
    std::vector<std::vector<double>> weights_;  // per class, last entry is the bias
};

std::vector<int> linear_svm(const EmbeddingMatrix& train_x, std::span<const int> train_y, int num_classes,
                            const EmbeddingMatrix& test_x, std::uint64_t seed, const SvmConfig& cfg = {});

struct KMeansResult {
    std::vector<int> labels;
    std::vector<std::vector<double>> centers;
    double inertia = 0.0;
};

/// Lloyd's algorithm with k-means++ seeding; best inertia over `restarts`.
KMeansResult kmeans(const EmbeddingMatrix& x, int k, std::uint64_t seed, int restarts = 10, int max_iter = 300);

double macro_f1(std::span<const int> y_true, std::span<const int> y_pred, int num_classes);
double micro_f1(std::span<const int> y_true, std::span<const int> y_pred, int num_classes);
/// Mutual information over the arithmetic mean of the two entropies (natural log).
double nmi(std::span<const int> y_true, std::span<const int> y_clusters);
double ari(std::span<const int> y_true, std::span<const int> y_clusters);

struct MetricSummary {
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation
};

MetricSummary summarize(std::span<const double> values);

struct SeedResult {
    std::uint64_t seed = 0;
    std::vector<double> ma_f1;  // per ratio
    std::vector<double> mi_f1;  // per ratio
    double nmi = 0.0;
    double ari = 0.0;
};

struct EvalReport {
    std::vector<double> ratios;
    std::vector<SeedResult> per_seed;
    std::vector<MetricSummary> ma_f1;  // per ratio
    std::vector<MetricSummary> mi_f1;  // per ratio
    MetricSummary nmi;
    MetricSummary ari;
};

EvalReport evaluate(const EmbeddingMatrix& z, std::span<const int> labels, int num_classes,
                    std::span<const double> ratios, std::span<const std::uint64_t> seeds);

std::string eval_report_to_json(const EvalReport& report);
/// Per-seed rows, then a mean+-std footer; one column per metric and ratio.
std::string eval_report_to_csv(const EvalReport& report, const std::string& method = "RSEA-MVGNN");

}  // namespace rsea
