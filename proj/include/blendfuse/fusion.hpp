#pragma once

#include "blendfuse/core.hpp"
#include "blendfuse/eval.hpp"
#include "blendfuse/postprocess.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace blendfuse {

inline constexpr double kWeightSumTolerance = 1e-9;

// Non-negative per-encoder weights summing to one.
class WeightVector {
public:
    WeightVector() = default;
    // Throws ValidationError unless every weight is >= 0 and the sum is within `tol` of 1.
    explicit WeightVector(std::map<std::string, double> weights, double tol = kWeightSumTolerance);

    static WeightVector uniform(const std::vector<std::string>& encoders);

    const std::map<std::string, double>& weights() const { return weights_; }
    double operator[](const std::string& encoder) const;
    std::size_t size() const { return weights_.size(); }
    std::vector<std::string> encoders() const;

    friend bool operator==(const WeightVector&, const WeightVector&) = default;

private:
    std::map<std::string, double> weights_;
};

bool is_simplex(const std::map<std::string, double>& weights, double tol);

// `encoder,weight` with 6 decimals; reading accepts the rounding tolerance given.
std::string format_weights(const WeightVector& w);
WeightVector read_weights(const std::filesystem::path& path, double tol = 5e-3);

// Convex combination of each weighted encoder's clip-averaged distribution.
// Encoders are accumulated in name order, so the result does not depend on
// the order of `preds`.
Distribution fuse(const std::vector<EncoderPredictionSet>& preds, const WeightVector& w, const std::string& video_id);

// Labeled videos of one validation fold with every encoder's clip-averaged
// distribution precomputed (6 x n per encoder, encoders in name order).
struct FusionFold {
    int fold = 0;
    std::vector<std::string> video_ids;
    std::vector<Blend> labels;
    std::vector<Eigen::Matrix<double, kNumEmotions, Eigen::Dynamic>> encoder_probs;

    std::vector<Distribution> fused(const Eigen::VectorXd& weights) const;
};

class FusionProblem {
public:
    // Folds listed in `fold_ids` (all folds when empty). Every labeled video of
    // those folds must be predicted by every encoder.
    FusionProblem(const std::vector<EncoderPredictionSet>& preds, const Manifest& labels,
                  const FoldAssignment& folds, std::vector<int> fold_ids = {});

    const std::vector<std::string>& encoders() const { return encoders_; }
    const std::vector<FusionFold>& folds() const { return folds_; }

    Eigen::VectorXd to_vector(const WeightVector& w) const;
    WeightVector to_weights(const Eigen::VectorXd& v, double tol = kWeightSumTolerance) const;

    // Mean over folds of the Score after discretization at fixed thresholds.
    double objective(const Eigen::VectorXd& weights, const PostprocessConfig& post) const;
    // Best mean-over-folds Score across the threshold grids.
    double joint_objective(const Eigen::VectorXd& weights, const PostprocessConfig& post,
                           const std::vector<double>& alpha_grid, const std::vector<double>& beta_grid) const;

    std::vector<ThresholdSurface> fold_surfaces(const Eigen::VectorXd& weights, const PostprocessConfig& post,
                                                const std::vector<double>& alpha_grid,
                                                const std::vector<double>& beta_grid, int threads = 1) const;

private:
    std::vector<std::string> encoders_;
    std::vector<FusionFold> folds_;
};

enum class FusionStrategy { coordinate_ascent, exhaustive };

std::string_view strategy_name(FusionStrategy s);
FusionStrategy parse_fusion_strategy(std::string_view name);

struct WeightSearchOptions {
    FusionStrategy strategy = FusionStrategy::coordinate_ascent;
    std::vector<double> deltas = {0.10, 0.05, 0.02, 0.01};
    double grid_step = 0.05;
    // Re-optimize thresholds for every candidate instead of holding them fixed.
    bool joint_thresholds = false;
    std::vector<double> alpha_grid = default_threshold_grid();
    std::vector<double> beta_grid = default_threshold_grid();
};

struct SearchLogEntry {
    int step = 0;
    int candidate_id = 0;
    double objective = 0.0;
    Eigen::VectorXd weights;
};

struct WeightSearchResult {
    WeightVector weights;
    double objective = 0.0;
    std::vector<SearchLogEntry> log;
};

WeightSearchResult optimize_weights(const FusionProblem& problem, const PostprocessConfig& post,
                                    const WeightSearchOptions& options = {});

// All compositions of the simplex on the given step (M <= 3).
std::vector<Eigen::VectorXd> simplex_grid(int encoders, double step);

std::string format_search_log(const WeightSearchResult& result);

} // namespace blendfuse
