#include "blendfuse/crossval.hpp"

#include "blendfuse/io.hpp"

namespace blendfuse {

PostprocessConfig PipelineConfig::postprocess(ThresholdPair t) const
{
    PostprocessConfig p;
    p.neutral_index = neutral_index;
    p.renormalize_survivors = renormalize_survivors;
    p.thresholds = t;
    return p;
}

void PipelineConfig::validate() const
{
    postprocess(search_thresholds.value_or(ThresholdPair{})).validate();
    if (weight_search.alpha_grid.empty() || weight_search.beta_grid.empty())
        throw ConfigError("threshold grids must be non-empty");
    if (threads < 1)
        throw ConfigError("threads must be >= 1");
}

FittedPipeline fit_pipeline(const FusionProblem& problem, const PipelineConfig& cfg)
{
    cfg.validate();
    const auto& grids = cfg.weight_search;
    FittedPipeline fit;
    if (cfg.search_thresholds) {
        fit.search_thresholds = *cfg.search_thresholds;
    } else {
        const auto M = static_cast<Eigen::Index>(problem.encoders().size());
        const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(M, 1.0 / static_cast<double>(M));
        const auto surfaces =
            problem.fold_surfaces(uniform, cfg.postprocess({}), grids.alpha_grid, grids.beta_grid, cfg.threads);
        fit.search_thresholds = select_thresholds(surfaces, cfg.threshold_strategy);
    }
    fit.weights = optimize_weights(problem, cfg.postprocess(fit.search_thresholds), grids);
    fit.surfaces = problem.fold_surfaces(problem.to_vector(fit.weights.weights), cfg.postprocess({}),
                                         grids.alpha_grid, grids.beta_grid, cfg.threads);
    fit.thresholds = select_thresholds(fit.surfaces, cfg.threshold_strategy);
    return fit;
}

CrossValidationResult cross_validate(const std::vector<EncoderPredictionSet>& preds, const Manifest& labels,
                                     const FoldAssignment& folds, const PipelineConfig& cfg)
{
    CrossValidationResult cv;
    MatchCounts pooled;
    std::vector<double> ap, as, sc;
    for (int f = 0; f < folds.k(); ++f) {
        std::vector<int> rest;
        for (int g = 0; g < folds.k(); ++g)
            if (g != f)
                rest.push_back(g);
        const FusionProblem train(preds, labels, folds, rest);
        const FusionProblem held(preds, labels, folds, {f});
        const FittedPipeline fit = fit_pipeline(train, cfg);

        const auto& fold = held.folds().front();
        const auto fused = fold.fused(held.to_vector(fit.weights.weights));
        const PostprocessConfig post = cfg.postprocess(fit.thresholds);
        std::vector<Blend> out(fused.size());
        for (std::size_t k = 0; k < fused.size(); ++k)
            out[k] = discretize(fused[k], post);
        const MatchCounts counts = count_matches(out, fold.labels);
        pooled += counts;

        FoldOutcome o{f, fit.weights.weights, fit.thresholds, counts.result()};
        ap.push_back(o.result.acc_p);
        as.push_back(o.result.acc_s);
        sc.push_back(o.result.score);
        cv.folds.push_back(std::move(o));
    }
    cv.acc_p = mean_std(ap);
    cv.acc_s = mean_std(as);
    cv.score = mean_std(sc);
    cv.score.mean = combined_score(cv.acc_p.mean, cv.acc_s.mean);
    cv.pooled = pooled.result();
    return cv;
}

std::string format_results(const CrossValidationResult& cv)
{
    using io::format_double;
    std::string out = "fold,acc_p,acc_s,score,n\n";
    std::size_t n = 0;
    for (const auto& f : cv.folds) {
        out += std::to_string(f.fold) + "," + format_double(f.result.acc_p) + "," + format_double(f.result.acc_s) +
               "," + format_double(f.result.score) + "," + std::to_string(f.result.n) + "\n";
        n += f.result.n;
    }
    out += "summary," + format_double(cv.acc_p.mean) + "," + format_double(cv.acc_s.mean) + "," +
           format_double(cv.score.mean) + "," + std::to_string(n) + "\n";
    out += "summary_std," + format_double(cv.acc_p.std) + "," + format_double(cv.acc_s.std) + "," +
           format_double(cv.score.std) + "," + std::to_string(n) + "\n";
    return out;
}

} // namespace blendfuse
