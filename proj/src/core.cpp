#include "blendfuse/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace blendfuse {

Emotion emotion_from_index(int index)
{
    if (index < 0 || index >= kNumEmotions)
        throw ValidationError("emotion index out of range: " + std::to_string(index));
    return static_cast<Emotion>(index);
}

std::string_view emotion_name(Emotion e)
{
    return kEmotionNames[static_cast<std::size_t>(index_of(e))];
}

Emotion parse_emotion(std::string_view name)
{
    for (int i = 0; i < kNumEmotions; ++i)
        if (kEmotionNames[static_cast<std::size_t>(i)] == name)
            return static_cast<Emotion>(i);
    throw ValidationError("unknown emotion '" + std::string(name) + "'");
}

bool is_distribution(const Distribution& p, double tol)
{
    if (!p.allFinite())
        return false;
    if ((p.array() < 0.0).any() || (p.array() > 1.0).any())
        return false;
    return std::abs(p.sum() - 1.0) <= tol;
}

SimplexCheck check_distribution(Distribution& p)
{
    if (!p.allFinite())
        throw ValidationError("probability row contains non-finite values");
    if ((p.array() < 0.0).any() || (p.array() > 1.0).any())
        throw ValidationError("probability row has entries outside [0, 1]");
    const double s = p.sum();
    const double err = std::abs(s - 1.0);
    if (err <= kSimplexTolerance)
        return SimplexCheck::ok;
    if (err <= kRenormalizeTolerance) {
        p /= s;
        return SimplexCheck::renormalized;
    }
    throw ValidationError("probability row sums to " + std::to_string(s));
}

Blend canonicalize_annotation(Emotion primary, std::optional<Emotion> secondary, int salience_primary)
{
    if (salience_primary == 100) {
        if (secondary)
            throw ValidationError("salience 100 with a secondary emotion");
        return Blend{primary, std::nullopt, 100};
    }
    if (salience_primary != 70 && salience_primary != 50 && salience_primary != 30)
        throw ValidationError("salience must be one of 100, 70, 50, 30; got " +
                              std::to_string(salience_primary));
    if (!secondary)
        throw ValidationError("blend salience without a secondary emotion");
    if (*secondary == primary)
        throw ValidationError("blend with identical emotions");

    Emotion a = primary;
    Emotion b = *secondary;
    int sal = salience_primary;
    if (sal == 30) {
        std::swap(a, b);
        sal = 70;
    } else if (sal == 50 && index_of(b) < index_of(a)) {
        std::swap(a, b);
    }
    return Blend{a, b, sal};
}

std::string to_string(const Blend& b)
{
    std::string s = "{" + std::string(emotion_name(b.primary)) + ": " + std::to_string(b.salience_primary);
    if (b.secondary)
        s += ", " + std::string(emotion_name(*b.secondary)) + ": " + std::to_string(100 - b.salience_primary);
    return s + "}";
}

Manifest::Manifest(std::vector<SampleRecord> records)
    : records_(std::move(records))
{
    for (std::size_t i = 0; i < records_.size(); ++i) {
        if (!index_.emplace(records_[i].video_id, i).second)
            throw ValidationError("duplicate video_id '" + records_[i].video_id + "'");
    }
}

const SampleRecord* Manifest::find(const std::string& video_id) const
{
    auto it = index_.find(video_id);
    return it == index_.end() ? nullptr : &records_[it->second];
}

std::vector<std::string> Manifest::actors() const
{
    std::set<std::string> s;
    for (const auto& r : records_)
        s.insert(r.actor_id);
    return {s.begin(), s.end()};
}

Distribution EncoderPredictionSet::averaged(const std::string& video_id) const
{
    auto it = rows.find(video_id);
    if (it == rows.end())
        throw ValidationError("encoder '" + encoder_name + "' has no prediction for '" + video_id + "'");
    return average_clips(it->second);
}

} // namespace blendfuse
