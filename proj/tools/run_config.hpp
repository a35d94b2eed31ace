#pragma once

#include "blendfuse/crossval.hpp"
#include "blendfuse/features.hpp"
#include "blendfuse/mlp.hpp"
#include "blendfuse/synth.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace blendfuse::cli {

struct GridSpec {
    double lo = 0.0;
    double hi = 0.5;
    double step = 0.01;

    std::vector<double> values() const { return make_grid(lo, hi, step); }
};

// Everything a run needs; loaded from a single JSON file, then overridden by
// command-line flags. Unknown keys are rejected.
struct RunConfig {
    std::filesystem::path predictions_dir;
    std::filesystem::path labels;
    std::filesystem::path folds;
    std::filesystem::path features_dir;
    std::filesystem::path weights; // optional, for sensitivity
    std::filesystem::path results; // optional, for verify-identities
    std::filesystem::path output_dir = "out";

    int k = 5;
    std::uint64_t seed = 0;
    int threads = 1;

    GridSpec alpha_grid;
    GridSpec beta_grid;
    FusionStrategy fusion_strategy = FusionStrategy::coordinate_ascent;
    double grid_step = 0.05;
    bool joint_thresholds = false;
    ThresholdStrategy threshold_strategy = ThresholdStrategy::per_fold_average;
    std::optional<int> neutral_index;
    bool renormalize_survivors = false;
    std::optional<ThresholdPair> search_thresholds;

    AggregationConfig aggregation;
    MlpConfig mlp;
    std::string encoder_name = "mlp";

    SynthConfig synth;
    int synth_folds = 5;
    bool synth_features = false;
    int synth_feature_dims = 12;
    int synth_feature_frames = 6;
    double synth_feature_noise = 0.1;

    double identity_tolerance = 5e-4;
    bool published = false;

    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig load(const std::filesystem::path& path);
    nlohmann::json to_json() const;

    // FNV-1a over the compact JSON of everything except output_dir and threads.
    std::string hash() const;

    PipelineConfig pipeline() const;

    // Throws ConfigError for any set path that does not exist.
    void check_paths() const;
};

std::uint64_t fnv1a64(std::string_view data);

} // namespace blendfuse::cli
