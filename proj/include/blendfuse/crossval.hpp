#pragma once

#include "blendfuse/eval.hpp"
#include "blendfuse/fusion.hpp"
#include "blendfuse/postprocess.hpp"

#include <optional>
#include <vector>

namespace blendfuse {

struct PipelineConfig {
    WeightSearchOptions weight_search;
    ThresholdStrategy threshold_strategy = ThresholdStrategy::per_fold_average;
    std::optional<int> neutral_index;
    bool renormalize_survivors = false;
    // Thresholds held fixed during the weight search. When absent they are
    // selected on uniform-weight fusion before the search starts.
    std::optional<ThresholdPair> search_thresholds;
    int threads = 1;

    PostprocessConfig postprocess(ThresholdPair t) const;
    void validate() const;
};

// Weights searched on the given folds, then thresholds re-selected once on the
// final weights from per-fold surfaces.
struct FittedPipeline {
    WeightSearchResult weights;
    ThresholdPair search_thresholds;
    std::vector<ThresholdSurface> surfaces;
    ThresholdPair thresholds;
};

FittedPipeline fit_pipeline(const FusionProblem& problem, const PipelineConfig& cfg);

struct FoldOutcome {
    int fold = 0;
    WeightVector weights;
    ThresholdPair thresholds;
    EvalResult result;
};

struct CrossValidationResult {
    std::vector<FoldOutcome> folds;
    MeanStd acc_p, acc_s, score;
    EvalResult pooled; // over all held-out clips
};

// For each fold f, fits weights and thresholds on the other folds and scores f.
CrossValidationResult cross_validate(const std::vector<EncoderPredictionSet>& preds, const Manifest& labels,
                                     const FoldAssignment& folds, const PipelineConfig& cfg);

// `fold,acc_p,acc_s,score,n` rows and a `summary` row of means, then a
// `summary_std` row of population standard deviations.
std::string format_results(const CrossValidationResult& cv);

} // namespace blendfuse
