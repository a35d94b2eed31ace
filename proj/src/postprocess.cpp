#include "blendfuse/postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace blendfuse {

namespace {

struct Top2 {
    int first = 0;
    int second = 1;
    double p_first = 0.0;
    double p_second = 0.0;
};

// Largest two entries; equal values resolve to the lower index.
Top2 top_two(const Distribution& p)
{
    Top2 t;
    t.first = 0;
    for (int i = 1; i < kNumEmotions; ++i)
        if (p(i) > p(t.first))
            t.first = i;
    t.second = t.first == 0 ? 1 : 0;
    for (int i = 0; i < kNumEmotions; ++i)
        if (i != t.first && p(i) > p(t.second))
            t.second = i;
    t.p_first = p(t.first);
    t.p_second = p(t.second);
    return t;
}

DiscretePrediction discretize_top2(const Top2& t, const PostprocessConfig& cfg)
{
    // A zero entry is absent even when alpha is 0.
    const bool keep_first = t.p_first >= cfg.thresholds.alpha && t.p_first > 0.0;
    const bool keep_second = t.p_second >= cfg.thresholds.alpha && t.p_second > 0.0;

    if (!keep_first && !keep_second)
        return single(static_cast<Emotion>(t.first));
    if (keep_first != keep_second)
        return single(static_cast<Emotion>(keep_first ? t.first : t.second));

    if (cfg.neutral_index) {
        const int neutral = *cfg.neutral_index;
        if (t.first == neutral)
            return single(static_cast<Emotion>(t.second));
        if (t.second == neutral)
            return single(static_cast<Emotion>(t.first));
    }

    double gap = std::abs(t.p_first - t.p_second);
    if (cfg.renormalize_survivors) {
        const double mass = t.p_first + t.p_second;
        gap = mass > 0.0 ? gap / mass : 0.0;
    }
    const Emotion a = static_cast<Emotion>(t.first);
    const Emotion b = static_cast<Emotion>(t.second);
    if (gap <= cfg.thresholds.beta)
        return canonicalize_annotation(a, b, 50);
    // first holds the larger probability; an exact tie always lands in the 50/50 branch
    return canonicalize_annotation(a, b, 70);
}

} // namespace

void ThresholdPair::validate() const
{
    if (!std::isfinite(alpha) || !std::isfinite(beta) || alpha < 0.0 || alpha > 1.0 || beta < 0.0 || beta > 1.0)
        throw ConfigError("thresholds must be finite and within [0, 1]");
}

void PostprocessConfig::validate() const
{
    thresholds.validate();
    if (neutral_index && (*neutral_index < 0 || *neutral_index >= kNumEmotions))
        throw ConfigError("neutral_index must be a class index in 0..5");
}

DiscretePrediction discretize(const Distribution& p, const PostprocessConfig& cfg)
{
    return discretize_top2(top_two(p), cfg);
}

std::vector<double> make_grid(double lo, double hi, double step)
{
    if (!(step > 0.0) || hi < lo)
        throw ConfigError("invalid grid specification");
    const auto n = static_cast<long long>(std::floor((hi - lo) / step + 1e-9));
    std::vector<double> g;
    for (long long i = 0; i <= n; ++i)
        g.push_back(std::round((lo + static_cast<double>(i) * step) * 1e12) / 1e12);
    return g;
}

std::vector<double> default_threshold_grid()
{
    return make_grid(0.0, 0.5, 0.01);
}

EvalResult ThresholdSurface::at(Eigen::Index i, Eigen::Index j) const
{
    return EvalResult{acc_p(i, j), acc_s(i, j), score(i, j), n};
}

ThresholdSurface search_thresholds(std::span<const Distribution> fused, std::span<const Blend> labels,
                                   const std::vector<double>& alpha_grid, const std::vector<double>& beta_grid,
                                   const PostprocessConfig& base, int threads)
{
    if (labels.empty())
        throw ValidationError("search_thresholds: empty label set");
    if (fused.size() != labels.size())
        throw ValidationError("search_thresholds: prediction/label count mismatch");
    if (alpha_grid.empty() || beta_grid.empty())
        throw ConfigError("search_thresholds: empty grid");
    for (double v : alpha_grid)
        ThresholdPair{v, 0.0}.validate();
    for (double v : beta_grid)
        ThresholdPair{0.0, v}.validate();

    std::vector<Top2> tops(fused.size());
    for (std::size_t k = 0; k < fused.size(); ++k)
        tops[k] = top_two(fused[k]);

    ThresholdSurface s;
    s.alpha_grid = alpha_grid;
    s.beta_grid = beta_grid;
    s.n = labels.size();
    const auto na = static_cast<Eigen::Index>(alpha_grid.size());
    const auto nb = static_cast<Eigen::Index>(beta_grid.size());
    s.score.resize(na, nb);
    s.acc_p.resize(na, nb);
    s.acc_s.resize(na, nb);

    auto fill_row = [&](Eigen::Index i) {
        PostprocessConfig cfg = base;
        std::vector<Blend> preds(tops.size());
        for (Eigen::Index j = 0; j < nb; ++j) {
            cfg.thresholds = {alpha_grid[static_cast<std::size_t>(i)], beta_grid[static_cast<std::size_t>(j)]};
            for (std::size_t k = 0; k < tops.size(); ++k)
                preds[k] = discretize_top2(tops[k], cfg);
            const EvalResult r = count_matches(preds, labels).result();
            s.score(i, j) = r.score;
            s.acc_p(i, j) = r.acc_p;
            s.acc_s(i, j) = r.acc_s;
        }
    };

    const int workers = std::clamp<int>(threads, 1, static_cast<int>(na));
    if (workers == 1) {
        for (Eigen::Index i = 0; i < na; ++i)
            fill_row(i);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                for (Eigen::Index i = w; i < na; i += workers)
                    fill_row(i);
            });
        for (auto& t : pool)
            t.join();
    }

    bool have = false;
    for (Eigen::Index i = 0; i < na; ++i) {
        for (Eigen::Index j = 0; j < nb; ++j) {
            const double a = alpha_grid[static_cast<std::size_t>(i)];
            const double b = beta_grid[static_cast<std::size_t>(j)];
            const double v = s.score(i, j);
            const double bv = have ? s.score(s.best_i, s.best_j) : 0.0;
            const bool better = !have || v > bv ||
                                (v == bv && (a < s.best.alpha || (a == s.best.alpha && b < s.best.beta)));
            if (better) {
                have = true;
                s.best_i = i;
                s.best_j = j;
                s.best = {a, b};
            }
        }
    }
    s.best_result = s.at(s.best_i, s.best_j);
    return s;
}

std::string_view strategy_name(ThresholdStrategy s)
{
    switch (s) {
    case ThresholdStrategy::per_fold_average: return "per_fold_average";
    case ThresholdStrategy::decoupled: return "decoupled";
    case ThresholdStrategy::best_fold: return "best_fold";
    }
    return "?";
}

ThresholdStrategy parse_threshold_strategy(std::string_view name)
{
    for (auto s : {ThresholdStrategy::per_fold_average, ThresholdStrategy::decoupled, ThresholdStrategy::best_fold})
        if (strategy_name(s) == name)
            return s;
    throw ConfigError("unknown threshold strategy '" + std::string(name) + "'");
}

ThresholdPair select_thresholds(std::span<const ThresholdSurface> per_fold, ThresholdStrategy strategy)
{
    if (per_fold.empty())
        throw ValidationError("select_thresholds: no fold surfaces");
    for (const auto& s : per_fold)
        if (s.alpha_grid != per_fold.front().alpha_grid || s.beta_grid != per_fold.front().beta_grid)
            throw ValidationError("select_thresholds: fold surfaces use different grids");
    const double k = static_cast<double>(per_fold.size());

    switch (strategy) {
    case ThresholdStrategy::per_fold_average: {
        ThresholdPair t{0.0, 0.0};
        for (const auto& s : per_fold) {
            t.alpha += s.best.alpha;
            t.beta += s.best.beta;
        }
        t.alpha /= k;
        t.beta /= k;
        return t;
    }
    case ThresholdStrategy::decoupled: {
        const auto& alphas = per_fold.front().alpha_grid;
        const auto& betas = per_fold.front().beta_grid;
        Eigen::VectorXd presence = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(alphas.size()));
        for (const auto& s : per_fold)
            presence += s.acc_p.rowwise().maxCoeff();
        presence /= k;
        Eigen::Index ia = 0;
        for (Eigen::Index i = 1; i < presence.size(); ++i) {
            const auto ui = static_cast<std::size_t>(i), ua = static_cast<std::size_t>(ia);
            if (presence(i) > presence(ia) || (presence(i) == presence(ia) && alphas[ui] < alphas[ua]))
                ia = i;
        }
        Eigen::VectorXd salience = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(betas.size()));
        for (const auto& s : per_fold)
            salience += s.acc_s.row(ia).transpose();
        salience /= k;
        Eigen::Index ib = 0;
        for (Eigen::Index j = 1; j < salience.size(); ++j) {
            const auto uj = static_cast<std::size_t>(j), ub = static_cast<std::size_t>(ib);
            if (salience(j) > salience(ib) || (salience(j) == salience(ib) && betas[uj] < betas[ub]))
                ib = j;
        }
        return {alphas[static_cast<std::size_t>(ia)], betas[static_cast<std::size_t>(ib)]};
    }
    case ThresholdStrategy::best_fold: {
        std::size_t best = 0;
        for (std::size_t f = 1; f < per_fold.size(); ++f)
            if (per_fold[f].best_result.score > per_fold[best].best_result.score)
                best = f;
        return per_fold[best].best;
    }
    }
    throw ConfigError("select_thresholds: unknown strategy");
}

BetaSpread beta_spread(std::span<const ThresholdSurface> per_fold)
{
    if (per_fold.empty())
        throw ValidationError("beta_spread: no fold surfaces");
    BetaSpread b{per_fold.front().best.beta, per_fold.front().best.beta, std::nullopt};
    for (const auto& s : per_fold) {
        b.min = std::min(b.min, s.best.beta);
        b.max = std::max(b.max, s.best.beta);
    }
    if (b.min > 0.0)
        b.ratio = b.max / b.min;
    return b;
}

} // namespace blendfuse
