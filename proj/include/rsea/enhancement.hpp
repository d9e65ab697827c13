#pragma once

#include <functional>
#include <vector>

#include "rsea/graph_data.hpp"
#include "rsea/tensor.hpp"

namespace rsea {

/// Node priorities for structural enhancement.
struct PriorityState {
    std::vector<double> phi;    // current priorities
    std::vector<double> delta;  // degree centrality
    std::vector<double> theta;  // per-node feature variance
    std::vector<bool> enhanced;

    /// Highest-priority node not yet enhanced; ties go to the lowest index.
    /// Returns num_nodes when every node is enhanced.
    std::size_t next_node() const;
    std::size_t num_enhanced() const;
};

struct EnhancementOutcome {
    Tensor enhanced_adjacency;
    std::vector<double> uncertainty_trace;  // accepted uncertainties, non-increasing
    std::size_t total_enhanced = 0;         // R
    std::size_t iterations = 0;             // probe evaluations
    std::size_t batch_size = 0;             // T
    bool symmetric = true;                  // false: rows only were enhanced
    std::vector<std::size_t> order;         // nodes in enhancement order
};

/// Maps a candidate adjacency to the model's uncertainty for the view.
using UncertaintyProbe = std::function<double(const Tensor& adjacency)>;

/// Fraction of other nodes reached by a strictly positive edge.
std::vector<double> degree_centrality(const Tensor& adjacency);
/// Population variance of each feature row.
std::vector<double> feature_variance(const Tensor& features);
PriorityState priority_vector(const Tensor& adjacency, const Tensor& features);

/// Cosine similarity; zero-norm rows give 0.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Sets every positive entry of row `node` (and its column when `symmetric`) to a_max.
Tensor enhance_node(const Tensor& adjacency, std::size_t node, double a_max, bool symmetric = true);
/// Scales each priority by (1 - cos(F(k), F(node))) and marks `node` enhanced.
PriorityState decorrelate(PriorityState state, const Tensor& features, std::size_t node);

/// T = max(1, round(0.05 N)), rounding half up.
std::size_t batch_size_for(std::size_t num_nodes);

/// Uncertainty-gated enhancement loop. The probe must stay fixed for the whole run.
EnhancementOutcome reliable_enhance(const GraphView& view, const UncertaintyProbe& probe);

}  // namespace rsea
