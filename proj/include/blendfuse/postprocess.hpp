#pragma once

#include "blendfuse/core.hpp"
#include "blendfuse/eval.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace blendfuse {

// Presence threshold alpha and salience threshold beta.
struct ThresholdPair {
    double alpha = 0.0;
    double beta = 0.0;

    void validate() const;
    friend bool operator==(const ThresholdPair&, const ThresholdPair&) = default;
};

struct PostprocessConfig {
    std::optional<int> neutral_index; // absent: step 3 is a no-op
    ThresholdPair thresholds;
    // Compare p1/(p1+p2) - p2/(p1+p2) against beta instead of the raw gap.
    bool renormalize_survivors = false;

    void validate() const;
};

// Top-2 masking, presence threshold, neutral collapse, salience split.
DiscretePrediction discretize(const Distribution& p, const PostprocessConfig& cfg);

// {0.00, 0.01, ..., 0.50}
std::vector<double> default_threshold_grid();
std::vector<double> make_grid(double lo, double hi, double step);

// Score / ACC_P / ACC_S at every (alpha_i, beta_j).
struct ThresholdSurface {
    std::vector<double> alpha_grid;
    std::vector<double> beta_grid;
    Eigen::MatrixXd score;
    Eigen::MatrixXd acc_p;
    Eigen::MatrixXd acc_s;
    std::size_t n = 0;

    ThresholdPair best;       // argmax score; ties -> smaller alpha, then smaller beta
    EvalResult best_result;
    Eigen::Index best_i = 0;
    Eigen::Index best_j = 0;

    EvalResult at(Eigen::Index i, Eigen::Index j) const;
};

// Exhaustive evaluation of every grid point. `base` supplies the neutral
// setting and the survivor-renormalization flag; its thresholds are ignored.
ThresholdSurface search_thresholds(std::span<const Distribution> fused, std::span<const Blend> labels,
                                   const std::vector<double>& alpha_grid, const std::vector<double>& beta_grid,
                                   const PostprocessConfig& base = {}, int threads = 1);

enum class ThresholdStrategy { per_fold_average, decoupled, best_fold };

std::string_view strategy_name(ThresholdStrategy s);
ThresholdStrategy parse_threshold_strategy(std::string_view name);

// Combines per-fold surfaces (all on identical grids) into one operating point.
ThresholdPair select_thresholds(std::span<const ThresholdSurface> per_fold, ThresholdStrategy strategy);

struct BetaSpread {
    double min = 0.0;
    double max = 0.0;
    std::optional<double> ratio; // max / min; absent when min == 0
};

BetaSpread beta_spread(std::span<const ThresholdSurface> per_fold);

} // namespace blendfuse
