#include "blendfuse/fusion.hpp"

#include "blendfuse/io.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace blendfuse {

bool is_simplex(const std::map<std::string, double>& weights, double tol)
{
    if (weights.empty())
        return false;
    double sum = 0.0;
    for (const auto& [name, w] : weights) {
        if (!std::isfinite(w) || w < 0.0)
            return false;
        sum += w;
    }
    return std::abs(sum - 1.0) <= tol;
}

WeightVector::WeightVector(std::map<std::string, double> weights, double tol)
    : weights_(std::move(weights))
{
    if (!is_simplex(weights_, tol))
        throw ValidationError("weights must be non-negative and sum to 1");
}

WeightVector WeightVector::uniform(const std::vector<std::string>& encoders)
{
    if (encoders.empty())
        throw ValidationError("uniform weights need at least one encoder");
    std::map<std::string, double> m;
    for (const auto& e : encoders)
        m[e] = 1.0 / static_cast<double>(encoders.size());
    return WeightVector(std::move(m));
}

double WeightVector::operator[](const std::string& encoder) const
{
    auto it = weights_.find(encoder);
    if (it == weights_.end())
        throw ValidationError("no weight for encoder '" + encoder + "'");
    return it->second;
}

std::vector<std::string> WeightVector::encoders() const
{
    std::vector<std::string> out;
    for (const auto& [name, w] : weights_)
        out.push_back(name);
    return out;
}

std::string format_weights(const WeightVector& w)
{
    std::string out = "encoder,weight\n";
    for (const auto& [name, v] : w.weights())
        out += name + "," + io::format_fixed(v, 6) + "\n";
    return out;
}

WeightVector read_weights(const std::filesystem::path& path, double tol)
{
    io::CsvReader reader(path, "encoder,weight");
    std::map<std::string, double> m;
    std::vector<std::string> f;
    while (reader.next(f))
        if (!m.emplace(f[0], io::parse_double(f[1])).second)
            throw ValidationError(reader.where() + ": encoder '" + f[0] + "' listed twice");
    return WeightVector(std::move(m), tol);
}

Distribution fuse(const std::vector<EncoderPredictionSet>& preds, const WeightVector& w, const std::string& video_id)
{
    Distribution acc = Distribution::Zero();
    for (const auto& [name, weight] : w.weights()) {
        auto it = std::find_if(preds.begin(), preds.end(),
                               [&](const EncoderPredictionSet& s) { return s.encoder_name == name; });
        if (it == preds.end())
            throw ValidationError("fuse: no predictions loaded for encoder '" + name + "'");
        if (!it->contains(video_id))
            throw ValidationError("fuse: encoder '" + name + "' has no prediction for video '" + video_id + "'");
        acc += weight * it->averaged(video_id);
    }
    return acc;
}

std::vector<Distribution> FusionFold::fused(const Eigen::VectorXd& weights) const
{
    Eigen::Matrix<double, kNumEmotions, Eigen::Dynamic> acc =
        Eigen::Matrix<double, kNumEmotions, Eigen::Dynamic>::Zero(kNumEmotions, static_cast<Eigen::Index>(labels.size()));
    for (std::size_t m = 0; m < encoder_probs.size(); ++m)
        acc += weights(static_cast<Eigen::Index>(m)) * encoder_probs[m];
    std::vector<Distribution> out(labels.size());
    for (std::size_t k = 0; k < labels.size(); ++k)
        out[k] = acc.col(static_cast<Eigen::Index>(k));
    return out;
}

FusionProblem::FusionProblem(const std::vector<EncoderPredictionSet>& preds, const Manifest& labels,
                             const FoldAssignment& folds, std::vector<int> fold_ids)
{
    if (preds.empty())
        throw ValidationError("fusion needs at least one encoder");
    std::vector<const EncoderPredictionSet*> sorted;
    for (const auto& p : preds)
        sorted.push_back(&p);
    std::sort(sorted.begin(), sorted.end(),
              [](const auto* a, const auto* b) { return a->encoder_name < b->encoder_name; });
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (i > 0 && sorted[i]->encoder_name == sorted[i - 1]->encoder_name)
            throw ValidationError("duplicate encoder name '" + sorted[i]->encoder_name + "'");
        encoders_.push_back(sorted[i]->encoder_name);
    }

    if (fold_ids.empty())
        for (int f = 0; f < folds.k(); ++f)
            fold_ids.push_back(f);

    std::vector<std::string> missing;
    std::set<std::string> unassigned;
    for (int f : fold_ids) {
        FusionFold fold;
        fold.fold = f;
        for (const auto& r : labels.records()) {
            if (!r.annotation)
                continue;
            if (!folds.contains(r.actor_id)) {
                unassigned.insert(r.actor_id);
                continue;
            }
            if (folds.fold_of(r.actor_id) != f)
                continue;
            fold.video_ids.push_back(r.video_id);
            fold.labels.push_back(*r.annotation);
        }
        if (fold.labels.empty())
            throw ValidationError("fold " + std::to_string(f) + " has no labeled videos");
        const auto n = static_cast<Eigen::Index>(fold.labels.size());
        for (const auto* set : sorted) {
            Eigen::Matrix<double, kNumEmotions, Eigen::Dynamic> probs(kNumEmotions, n);
            for (Eigen::Index k = 0; k < n; ++k) {
                const auto& vid = fold.video_ids[static_cast<std::size_t>(k)];
                if (!set->contains(vid)) {
                    missing.push_back(set->encoder_name + ":" + vid);
                    probs.col(k).setConstant(1.0 / kNumEmotions);
                    continue;
                }
                probs.col(k) = set->averaged(vid);
            }
            fold.encoder_probs.push_back(std::move(probs));
        }
        folds_.push_back(std::move(fold));
    }
    if (!unassigned.empty()) {
        std::string msg = "actors without a fold:";
        for (const auto& a : unassigned)
            msg += " " + a;
        throw ValidationError(msg);
    }
    if (!missing.empty()) {
        std::string msg = std::to_string(missing.size()) + " missing encoder predictions (encoder:video):";
        for (std::size_t i = 0; i < std::min<std::size_t>(missing.size(), 20); ++i)
            msg += " " + missing[i];
        throw ValidationError(msg);
    }
}

Eigen::VectorXd FusionProblem::to_vector(const WeightVector& w) const
{
    Eigen::VectorXd v(static_cast<Eigen::Index>(encoders_.size()));
    for (std::size_t m = 0; m < encoders_.size(); ++m)
        v(static_cast<Eigen::Index>(m)) = w[encoders_[m]];
    if (w.size() != encoders_.size())
        throw ValidationError("weight vector names encoders that are not loaded");
    return v;
}

WeightVector FusionProblem::to_weights(const Eigen::VectorXd& v, double tol) const
{
    std::map<std::string, double> m;
    for (std::size_t i = 0; i < encoders_.size(); ++i)
        m[encoders_[i]] = v(static_cast<Eigen::Index>(i));
    return WeightVector(std::move(m), tol);
}

double FusionProblem::objective(const Eigen::VectorXd& weights, const PostprocessConfig& post) const
{
    double total = 0.0;
    for (const auto& fold : folds_) {
        const auto fused = fold.fused(weights);
        std::vector<Blend> preds(fused.size());
        for (std::size_t k = 0; k < fused.size(); ++k)
            preds[k] = discretize(fused[k], post);
        total += count_matches(preds, fold.labels).result().score;
    }
    const double obj = total / static_cast<double>(folds_.size());
    if (!std::isfinite(obj))
        throw NumericError("fusion objective is not finite");
    return obj;
}

std::vector<ThresholdSurface> FusionProblem::fold_surfaces(const Eigen::VectorXd& weights,
                                                           const PostprocessConfig& post,
                                                           const std::vector<double>& alpha_grid,
                                                           const std::vector<double>& beta_grid, int threads) const
{
    std::vector<ThresholdSurface> out;
    for (const auto& fold : folds_)
        out.push_back(search_thresholds(fold.fused(weights), fold.labels, alpha_grid, beta_grid, post, threads));
    return out;
}

double FusionProblem::joint_objective(const Eigen::VectorXd& weights, const PostprocessConfig& post,
                                      const std::vector<double>& alpha_grid,
                                      const std::vector<double>& beta_grid) const
{
    const auto surfaces = fold_surfaces(weights, post, alpha_grid, beta_grid);
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(surfaces.front().score.rows(), surfaces.front().score.cols());
    for (const auto& s : surfaces)
        mean += s.score;
    mean /= static_cast<double>(surfaces.size());
    return mean.maxCoeff();
}

std::string_view strategy_name(FusionStrategy s)
{
    return s == FusionStrategy::coordinate_ascent ? "coordinate-ascent" : "exhaustive";
}

FusionStrategy parse_fusion_strategy(std::string_view name)
{
    if (name == "coordinate-ascent")
        return FusionStrategy::coordinate_ascent;
    if (name == "exhaustive")
        return FusionStrategy::exhaustive;
    throw ConfigError("unknown fusion strategy '" + std::string(name) + "'");
}

std::vector<Eigen::VectorXd> simplex_grid(int encoders, double step)
{
    if (encoders < 1 || encoders > 3)
        throw ConfigError("exhaustive simplex grid supports 1 to 3 encoders");
    const auto units = static_cast<int>(std::lround(1.0 / step));
    if (units < 1 || std::abs(units * step - 1.0) > 1e-9)
        throw ConfigError("grid step must divide 1");
    std::vector<Eigen::VectorXd> out;
    Eigen::VectorXd w(encoders);
    if (encoders == 1) {
        w << 1.0;
        out.push_back(w);
    } else if (encoders == 2) {
        for (int a = 0; a <= units; ++a) {
            w << static_cast<double>(a) / units, static_cast<double>(units - a) / units;
            out.push_back(w);
        }
    } else {
        for (int a = 0; a <= units; ++a)
            for (int b = 0; a + b <= units; ++b) {
                w << static_cast<double>(a) / units, static_cast<double>(b) / units,
                    static_cast<double>(units - a - b) / units;
                out.push_back(w);
            }
    }
    return out;
}

WeightSearchResult optimize_weights(const FusionProblem& problem, const PostprocessConfig& post,
                                    const WeightSearchOptions& options)
{
    post.validate();
    const auto M = static_cast<Eigen::Index>(problem.encoders().size());
    const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(M, 1.0 / static_cast<double>(M));
    auto eval = [&](const Eigen::VectorXd& w) {
        return options.joint_thresholds
                   ? problem.joint_objective(w, post, options.alpha_grid, options.beta_grid)
                   : problem.objective(w, post);
    };
    auto l1_to_uniform = [&](const Eigen::VectorXd& w) { return (w - uniform).cwiseAbs().sum(); };

    WeightSearchResult result;
    int next_id = 0;
    auto record = [&](int step, const Eigen::VectorXd& w, double obj) {
        result.log.push_back({step, next_id++, obj, w});
    };

    Eigen::VectorXd best = uniform;
    double best_obj = eval(uniform);
    record(0, uniform, best_obj);

    if (M > 1 && options.strategy == FusionStrategy::exhaustive) {
        for (const auto& w : simplex_grid(static_cast<int>(M), options.grid_step)) {
            const double obj = eval(w);
            record(1, w, obj);
            if (obj > best_obj || (obj == best_obj && l1_to_uniform(w) < l1_to_uniform(best))) {
                best = w;
                best_obj = obj;
            }
        }
    } else if (M > 1) {
        int step = 0;
        for (double delta : options.deltas) {
            while (true) {
                ++step;
                Eigen::VectorXd round_best;
                double round_obj = best_obj;
                bool improved = false;
                for (Eigen::Index from = 0; from < M; ++from) {
                    if (best(from) < delta - 1e-12)
                        continue;
                    for (Eigen::Index to = 0; to < M; ++to) {
                        if (to == from)
                            continue;
                        Eigen::VectorXd w = best;
                        w(from) = std::max(0.0, w(from) - delta);
                        w(to) += delta;
                        const double obj = eval(w);
                        record(step, w, obj);
                        if (obj > round_obj ||
                            (improved && obj == round_obj && l1_to_uniform(w) < l1_to_uniform(round_best))) {
                            round_best = w;
                            round_obj = obj;
                            improved = true;
                        }
                    }
                }
                if (!improved)
                    break;
                best = round_best;
                best_obj = round_obj;
            }
        }
    }

    result.objective = best_obj;
    result.weights = problem.to_weights(best, 1e-9);
    return result;
}

std::string format_search_log(const WeightSearchResult& result)
{
    std::string out = "step,candidate_id,objective\n";
    for (const auto& e : result.log)
        out += std::to_string(e.step) + "," + std::to_string(e.candidate_id) + "," + io::format_double(e.objective) +
               "\n";
    return out;
}

} // namespace blendfuse
