#pragma once

// Small synthetic datasets shared by the fusion, cross-validation, CLI and
// acceptance tests.

#include "test_util.hpp"

#include "blendfuse/eval.hpp"
#include "blendfuse/labels.hpp"

#include <random>

namespace fixtures {

using namespace blendfuse;

inline Blend random_blend(std::mt19937_64& rng)
{
    const int a = static_cast<int>(rng() % 6);
    const int b = (a + 1 + static_cast<int>(rng() % 5)) % 6;
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    if (u < 0.46)
        return single(emotion_from_index(a));
    return canonicalize_annotation(emotion_from_index(a), emotion_from_index(b), u < 0.64 ? 50 : 70);
}

// `actors` actors with `clips` labeled videos each: ids "act<a>" / "act<a>_v<c>".
inline Manifest random_manifest(int actors, int clips, std::mt19937_64& rng)
{
    std::vector<SampleRecord> r;
    for (int a = 0; a < actors; ++a)
        for (int c = 0; c < clips; ++c)
            r.push_back({"act" + std::to_string(a) + "_v" + std::to_string(c), "act" + std::to_string(a),
                         random_blend(rng)});
    return Manifest(std::move(r));
}

// Emits each label's soft encoding as its probability row.
inline EncoderPredictionSet oracle_encoder(const Manifest& m, const std::string& name)
{
    EncoderPredictionSet s;
    s.encoder_name = name;
    for (const auto& r : m.records()) {
        s.rows[r.video_id].push_back(encode_soft_label(*r.annotation));
        s.actor_of[r.video_id] = r.actor_id;
    }
    return s;
}

inline EncoderPredictionSet uniform_encoder(const Manifest& m, const std::string& name)
{
    EncoderPredictionSet s;
    s.encoder_name = name;
    for (const auto& r : m.records()) {
        s.rows[r.video_id].push_back(Distribution::Constant(1.0 / kNumEmotions));
        s.actor_of[r.video_id] = r.actor_id;
    }
    return s;
}

// Label-independent rows drawn uniformly from the simplex.
inline EncoderPredictionSet noise_encoder(const Manifest& m, const std::string& name, std::mt19937_64& rng)
{
    EncoderPredictionSet s;
    s.encoder_name = name;
    for (const auto& r : m.records()) {
        s.rows[r.video_id].push_back(testutil::random_distribution(rng));
        s.actor_of[r.video_id] = r.actor_id;
    }
    return s;
}

// Label-correlated but imperfect: soft label mixed with noise.
inline EncoderPredictionSet noisy_oracle(const Manifest& m, const std::string& name, double mix, std::mt19937_64& rng)
{
    EncoderPredictionSet s;
    s.encoder_name = name;
    for (const auto& r : m.records()) {
        s.rows[r.video_id].push_back(mix * encode_soft_label(*r.annotation) +
                                     (1.0 - mix) * testutil::random_distribution(rng));
        s.actor_of[r.video_id] = r.actor_id;
    }
    return s;
}

} // namespace fixtures
