#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "rsea/tensor.hpp"

namespace rsea {

/// One view of an instance: N x N non-negative adjacency (zero diagonal) and N x D features.
struct GraphView {
    Tensor adjacency;
    Tensor features;

    std::size_t num_nodes() const { return adjacency.rows(); }
    std::size_t feature_dim() const { return features.cols(); }
    bool symmetric() const;

    friend bool operator==(const GraphView&, const GraphView&) = default;
};

/// V views over a shared node set plus a class label.
struct MultiViewGraph {
    std::string id;
    int label = 0;
    std::vector<GraphView> views;

    std::size_t num_nodes() const { return views.empty() ? 0 : views.front().num_nodes(); }

    friend bool operator==(const MultiViewGraph&, const MultiViewGraph&) = default;
};

struct Dataset {
    int num_classes = 0;
    int num_views = 0;
    int feature_dim = 0;
    std::vector<MultiViewGraph> instances;

    std::vector<int> labels() const;

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Checks every GraphView/MultiViewGraph/Dataset invariant; throws DatasetError.
void validate(const Dataset& ds);

Dataset load_dataset(const std::filesystem::path& path);
Dataset parse_dataset(const std::string& json_text);
void save_dataset(const Dataset& ds, const std::filesystem::path& path);
std::string dataset_to_json(const Dataset& ds);

struct SyntheticConfig {
    int num_instances = 40;
    int num_classes = 2;
    int num_views = 2;
    int num_nodes = 20;
    int feature_dim = 8;
    double p_in = 0.9;
    double p_out = 0.1;
    std::set<int> noise_views;
    double feature_noise_sigma = 0.3;
    /// Views 1..V-1 become copies of view 0 (single-view corpora made two-view).
    bool duplicate_view = false;
};

void validate(const SyntheticConfig& cfg);

/// Stochastic-block-model views whose community count (label + 1) carries the class.
/// Instances are assigned labels round-robin so classes stay balanced.
Dataset generate_synthetic(const SyntheticConfig& cfg, std::uint64_t seed);

/// Stratified partition of instance indices.
struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    double train_ratio = 0.0;
};

/// Per class: shuffle with `seed`, then take round(ratio * n_c), clamped to [1, n_c - 1].
Split stratified_split(std::span<const int> labels, int num_classes, double train_ratio, std::uint64_t seed);
Split make_split(const Dataset& ds, double train_ratio, std::uint64_t seed);

}  // namespace rsea
