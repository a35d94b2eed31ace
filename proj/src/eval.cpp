#include "blendfuse/eval.hpp"

#include "blendfuse/io.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace blendfuse {

bool presence_match(const Blend& pred, const Blend& truth)
{
    if (pred.is_single() != truth.is_single())
        return false;
    if (pred.is_single())
        return pred.primary == truth.primary;
    return (pred.primary == truth.primary && *pred.secondary == *truth.secondary) ||
           (pred.primary == *truth.secondary && *pred.secondary == truth.primary);
}

EvalResult MatchCounts::result() const
{
    EvalResult r;
    r.n = n;
    if (n == 0)
        return r;
    r.acc_p = static_cast<double>(presence) / static_cast<double>(n);
    r.acc_s = static_cast<double>(salience) / static_cast<double>(n);
    r.score = combined_score(r.acc_p, r.acc_s);
    return r;
}

MatchCounts& MatchCounts::operator+=(const MatchCounts& o)
{
    presence += o.presence;
    salience += o.salience;
    n += o.n;
    return *this;
}

MatchCounts count_matches(std::span<const Blend> preds, std::span<const Blend> truths)
{
    if (preds.size() != truths.size())
        throw ValidationError("count_matches: prediction/label count mismatch");
    MatchCounts c;
    c.n = truths.size();
    for (std::size_t i = 0; i < truths.size(); ++i) {
        if (presence_match(preds[i], truths[i])) {
            ++c.presence;
            if (salience_match(preds[i], truths[i]))
                ++c.salience;
        }
    }
    return c;
}

EvalResult evaluate(std::span<const Blend> preds, std::span<const Blend> truths)
{
    if (truths.empty())
        throw ValidationError("evaluate: no labeled samples");
    return count_matches(preds, truths).result();
}

EvalResult evaluate(const std::map<std::string, Blend>& preds, const std::map<std::string, Blend>& labels)
{
    std::vector<Blend> p, t;
    std::vector<std::string> missing;
    for (const auto& [vid, truth] : labels) {
        auto it = preds.find(vid);
        if (it == preds.end()) {
            missing.push_back(vid);
            continue;
        }
        p.push_back(it->second);
        t.push_back(truth);
    }
    if (!missing.empty()) {
        std::string msg = "evaluate: " + std::to_string(missing.size()) + " labeled videos lack a prediction:";
        for (std::size_t i = 0; i < std::min<std::size_t>(missing.size(), 10); ++i)
            msg += " " + missing[i];
        throw ValidationError(msg);
    }
    return evaluate(p, t);
}

FoldAssignment::FoldAssignment(std::map<std::string, int> fold_of_actor, int k)
    : fold_of_actor_(std::move(fold_of_actor)), k_(k)
{
    if (k_ < 2)
        throw ValidationError("fold count must be >= 2");
    for (const auto& [actor, f] : fold_of_actor_)
        if (f < 0 || f >= k_)
            throw ValidationError("actor '" + actor + "' has fold " + std::to_string(f) + " outside [0, " +
                                  std::to_string(k_) + ")");
}

int FoldAssignment::fold_of(const std::string& actor_id) const
{
    auto it = fold_of_actor_.find(actor_id);
    if (it == fold_of_actor_.end())
        throw ValidationError("actor '" + actor_id + "' has no fold");
    return it->second;
}

FoldAssignment split_actors(const Manifest& manifest, int k, std::uint64_t /*seed*/)
{
    if (k < 2)
        throw ValidationError("split_actors: k must be >= 2");
    std::map<std::string, std::size_t> clips;
    for (const auto& r : manifest.records())
        ++clips[r.actor_id];
    if (static_cast<std::size_t>(k) > clips.size())
        throw ValidationError("split_actors: k = " + std::to_string(k) + " exceeds actor count " +
                              std::to_string(clips.size()));

    std::vector<std::pair<std::string, std::size_t>> actors(clips.begin(), clips.end());
    std::stable_sort(actors.begin(), actors.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });

    std::vector<std::size_t> load(static_cast<std::size_t>(k), 0);
    std::map<std::string, int> assignment;
    for (const auto& [actor, count] : actors) {
        const auto lightest = std::min_element(load.begin(), load.end()) - load.begin();
        assignment[actor] = static_cast<int>(lightest);
        load[static_cast<std::size_t>(lightest)] += count;
    }
    return FoldAssignment(std::move(assignment), k);
}

std::string format_folds(const FoldAssignment& folds)
{
    std::string out = "actor_id,fold\n";
    for (const auto& [actor, f] : folds.fold_of_actor())
        out += actor + "," + std::to_string(f) + "\n";
    return out;
}

FoldAssignment read_folds(const std::filesystem::path& path)
{
    io::CsvReader reader(path, "actor_id,fold");
    std::map<std::string, int> m;
    int max_fold = -1;
    std::vector<std::string> f;
    while (reader.next(f)) {
        const int fold = static_cast<int>(io::parse_int(f[1]));
        if (!m.emplace(f[0], fold).second)
            throw ValidationError(reader.where() + ": actor '" + f[0] + "' listed twice");
        max_fold = std::max(max_fold, fold);
    }
    std::set<int> used;
    for (const auto& [a, fold] : m)
        used.insert(fold);
    const int k = max_fold + 1;
    if (static_cast<int>(used.size()) != k)
        throw ValidationError(path.string() + ": fold indices must be contiguous from 0");
    return FoldAssignment(std::move(m), k);
}

void write_folds(const std::filesystem::path& path, const FoldAssignment& folds)
{
    io::write_text(path, format_folds(folds));
}

MeanStd mean_std(std::span<const double> values)
{
    MeanStd r;
    if (values.empty())
        return r;
    for (double v : values)
        r.mean += v;
    r.mean /= static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values)
        ss += (v - r.mean) * (v - r.mean);
    r.std = std::sqrt(ss / static_cast<double>(values.size()));
    return r;
}

} // namespace blendfuse
