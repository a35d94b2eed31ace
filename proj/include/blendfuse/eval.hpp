#pragma once

#include "blendfuse/core.hpp"

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace blendfuse {

// Presence accuracy, salience accuracy and the challenge score
// score = 0.5 * (acc_p + acc_s).
struct EvalResult {
    double acc_p = 0.0;
    double acc_s = 0.0;
    double score = 0.0;
    std::size_t n = 0;

    friend bool operator==(const EvalResult&, const EvalResult&) = default;
};

inline double combined_score(double acc_p, double acc_s) { return 0.5 * (acc_p + acc_s); }

// Same emotion set, order-free.
bool presence_match(const Blend& pred, const Blend& truth);
// Same set, same split and, for 70/30, the same dominant emotion.
inline bool salience_match(const Blend& pred, const Blend& truth) { return pred == truth; }

struct MatchCounts {
    std::size_t presence = 0;
    std::size_t salience = 0;
    std::size_t n = 0;

    EvalResult result() const;
    MatchCounts& operator+=(const MatchCounts& o);
};

MatchCounts count_matches(std::span<const Blend> preds, std::span<const Blend> truths);
EvalResult evaluate(std::span<const Blend> preds, std::span<const Blend> truths);

// Every labeled video must have a prediction; extra predictions are ignored.
EvalResult evaluate(const std::map<std::string, Blend>& preds, const std::map<std::string, Blend>& labels);

// actor_id -> fold index in [0, k).
class FoldAssignment {
public:
    FoldAssignment() = default;
    FoldAssignment(std::map<std::string, int> fold_of_actor, int k);

    int k() const { return k_; }
    const std::map<std::string, int>& fold_of_actor() const { return fold_of_actor_; }
    int fold_of(const std::string& actor_id) const;
    bool contains(const std::string& actor_id) const { return fold_of_actor_.count(actor_id) != 0; }

    friend bool operator==(const FoldAssignment&, const FoldAssignment&) = default;

private:
    std::map<std::string, int> fold_of_actor_;
    int k_ = 0;
};

// Greedy balance: actors by descending clip count (ties by actor_id), each
// placed in the fold with the fewest clips so far (ties by fold index). The
// assignment is fully determined by the manifest; `seed` is accepted for
// interface stability and does not change the result.
FoldAssignment split_actors(const Manifest& manifest, int k, std::uint64_t seed = 0);

// `actor_id,fold`, rows sorted by actor_id.
std::string format_folds(const FoldAssignment& folds);
FoldAssignment read_folds(const std::filesystem::path& path);
void write_folds(const std::filesystem::path& path, const FoldAssignment& folds);

struct MeanStd {
    double mean = 0.0;
    double std = 0.0; // population
};

MeanStd mean_std(std::span<const double> values);

} // namespace blendfuse
