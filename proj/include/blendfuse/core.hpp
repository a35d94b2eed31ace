#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace blendfuse {

// Bad input data (exit code 2).
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad or inconsistent run configuration (exit code 3).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Non-finite values or other numeric breakdown (exit code 4).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr int kNumEmotions = 6;

// Alphabetical and fixed; file formats depend on this order.
enum class Emotion : std::uint8_t { anger = 0, disgust, fear, happiness, sadness, surprise };

inline constexpr std::array<std::string_view, kNumEmotions> kEmotionNames = {
    "anger", "disgust", "fear", "happiness", "sadness", "surprise"};

constexpr int index_of(Emotion e) { return static_cast<int>(e); }
Emotion emotion_from_index(int index);
std::string_view emotion_name(Emotion e);
Emotion parse_emotion(std::string_view name);

template <typename Scalar>
using DistributionT = Eigen::Matrix<Scalar, kNumEmotions, 1>;

// A probability vector over the six emotions.
using Distribution = DistributionT<double>;

inline constexpr double kSimplexTolerance = 1e-6;
inline constexpr double kRenormalizeTolerance = 1e-3;

enum class SimplexCheck { ok, renormalized };

// Validates a probability row in place. Rows whose sum misses 1 by at most
// kRenormalizeTolerance are rescaled (returns `renormalized`); anything worse,
// negative/over-one entries, or non-finite values throw ValidationError.
SimplexCheck check_distribution(Distribution& p);
bool is_distribution(const Distribution& p, double tol = kSimplexTolerance);

// Ground-truth blend or post-processed prediction: one emotion at 100, or two
// emotions with the primary at 70 or 50. Always held in canonical form.
struct Blend {
    Emotion primary = Emotion::anger;
    std::optional<Emotion> secondary;
    int salience_primary = 100;

    bool is_single() const { return !secondary.has_value(); }
    friend bool operator==(const Blend&, const Blend&) = default;
};

using BlendAnnotation = Blend;
using DiscretePrediction = Blend;

// Accepts salience 100/70/50/30 for the primary side and returns the
// canonical form: 30/70 is flipped to 70/30, 50/50 is ordered by index.
Blend canonicalize_annotation(Emotion primary, std::optional<Emotion> secondary,
                              int salience_primary);

inline Blend single(Emotion e) { return canonicalize_annotation(e, std::nullopt, 100); }

std::string to_string(const Blend& b);

// Elementwise mean over multi-clip outputs.
template <typename Scalar>
DistributionT<Scalar> average_clips(std::span<const DistributionT<Scalar>> rows)
{
    if (rows.empty())
        throw ValidationError("average_clips: empty clip list");
    DistributionT<Scalar> acc = DistributionT<Scalar>::Zero();
    for (const auto& r : rows)
        acc += r;
    return acc / static_cast<Scalar>(rows.size());
}

inline Distribution average_clips(const std::vector<Distribution>& rows)
{
    return average_clips<double>(std::span<const Distribution>(rows));
}

struct SampleRecord {
    std::string video_id;
    std::string actor_id;
    std::optional<Blend> annotation;

    friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

// Ordered list of samples with unique video ids.
class Manifest {
public:
    Manifest() = default;
    explicit Manifest(std::vector<SampleRecord> records);

    const std::vector<SampleRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    const SampleRecord* find(const std::string& video_id) const;
    std::vector<std::string> actors() const;

    friend bool operator==(const Manifest& a, const Manifest& b) { return a.records_ == b.records_; }

private:
    std::vector<SampleRecord> records_;
    std::map<std::string, std::size_t> index_;
};

// Per-encoder output: video_id -> one row per clip.
struct EncoderPredictionSet {
    std::string encoder_name;
    std::map<std::string, std::string> actor_of;
    std::map<std::string, std::vector<Distribution>> rows;

    bool contains(const std::string& video_id) const { return rows.count(video_id) != 0; }
    Distribution averaged(const std::string& video_id) const;

    friend bool operator==(const EncoderPredictionSet&, const EncoderPredictionSet&) = default;
};

} // namespace blendfuse
