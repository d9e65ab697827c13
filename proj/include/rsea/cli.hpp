#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rsea/graph_data.hpp"
#include "rsea/model.hpp"
#include "rsea/training.hpp"

namespace rsea::cli {

/// Everything a run needs, loaded from one JSON file; command-line flags override it.
struct RunConfig {
    std::uint64_t seed = 0;
    SyntheticConfig synthetic;
    /// Hidden/output dims; the input dim is taken from the dataset.
    std::vector<std::size_t> hidden_dims{32, 16};
    bool aggregation_gradient = false;
    TrainConfig train;
    /// Fraction of each class used as the supervised training split.
    double train_split = 0.6;
    std::vector<double> ratios{0.2, 0.6};
    std::vector<std::uint64_t> eval_seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    std::optional<std::filesystem::path> dataset;
    std::optional<std::filesystem::path> checkpoint;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string run_config_to_json(const RunConfig& cfg);
void validate(const RunConfig& cfg);

/// "0..9" (inclusive range) or a comma-separated list.
std::vector<std::uint64_t> parse_seeds(const std::string& text);
std::vector<double> parse_ratios(const std::string& text);

/// Stable 64-bit FNV-1a of the text, as 16 hex digits.
std::string config_hash(const std::string& text);

/// Runs the command line; returns the process exit code
/// (0 success, 1 usage or configuration error, 2 runtime failure).
int run(int argc, const char* const* argv);

}  // namespace rsea::cli
