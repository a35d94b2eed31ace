#include "blendfuse/synth.hpp"

#include "blendfuse/labels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace blendfuse {

void SynthConfig::validate() const
{
    if (n_actors < 1 || clips_per_actor < 1)
        throw ConfigError("synth: n_actors and clips_per_actor must be positive");
    const LabelMix& m = label_mix;
    if (m.single < 0 || m.fifty < 0 || m.seventy < 0 || std::abs(m.single + m.fifty + m.seventy - 1.0) > 1e-9)
        throw ConfigError("synth: label_mix must be non-negative and sum to 1");
    if (!(gap_lo > 0.0) || !(gap_hi < 1.0) || gap_hi < gap_lo)
        throw ConfigError("synth: actor gap range must be an interval inside (0, 1)");
    if (!(top2_mass > 0.0 && top2_mass <= 1.0) || gap_hi >= top2_mass)
        throw ConfigError("synth: gaps must be smaller than the top-2 mass");
    if (!(single_peak > 1.0 / kNumEmotions && single_peak <= 1.0))
        throw ConfigError("synth: single_peak must exceed 1/6");
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma) || !(truncation > 0.0))
        throw ConfigError("synth: noise_sigma must be >= 0 and truncation > 0");
}

namespace {

std::string numbered(char prefix, int i, int width)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%c%0*d", prefix, width, i);
    return buf;
}

Distribution noisy(const Distribution& target, const SynthConfig& cfg, std::mt19937_64& rng)
{
    if (cfg.noise_sigma == 0.0)
        return target;
    Distribution logits;
    for (int i = 0; i < kNumEmotions; ++i) {
        double eps = 0.0;
        do {
            eps = standard_normal(rng);
        } while (std::abs(eps) > cfg.truncation);
        logits(i) = std::log(target(i)) + cfg.noise_sigma * eps;
    }
    return softmax(logits);
}

} // namespace

SynthData generate(const SynthConfig& cfg)
{
    cfg.validate();
    SynthData data;
    data.predictions.encoder_name = "synth";
    std::vector<SampleRecord> records;

    const double half = cfg.top2_mass / 2.0;
    const double blend_rest = (1.0 - cfg.top2_mass) / (kNumEmotions - 2);
    const double single_rest = (1.0 - cfg.single_peak) / (kNumEmotions - 1);

    for (int a = 0; a < cfg.n_actors; ++a) {
        const std::string actor = numbered('A', a, 3);
        std::mt19937_64 rng(mix_seed(cfg.seed ^ mix_seed(static_cast<std::uint64_t>(a))));
        const double gap = cfg.gap_lo + (cfg.gap_hi - cfg.gap_lo) * unit_uniform(rng);
        data.actor_gap[actor] = gap;

        for (int c = 0; c < cfg.clips_per_actor; ++c) {
            const std::string vid = actor + "_" + numbered('C', c, 4);
            const double u = unit_uniform(rng);
            Distribution target;
            Blend label;
            if (u < cfg.label_mix.single) {
                const auto e = static_cast<int>(rng() % kNumEmotions);
                target.setConstant(single_rest);
                target(e) = cfg.single_peak;
                label = single(static_cast<Emotion>(e));
            } else {
                // one of the 15 unordered pairs
                int pair = static_cast<int>(rng() % 15);
                int first = 0;
                while (pair >= kNumEmotions - 1 - first) {
                    pair -= kNumEmotions - 1 - first;
                    ++first;
                }
                int second = first + 1 + pair;
                target.setConstant(blend_rest);
                if (u < cfg.label_mix.single + cfg.label_mix.fifty) {
                    target(first) = half;
                    target(second) = half;
                    label = canonicalize_annotation(static_cast<Emotion>(first), static_cast<Emotion>(second), 50);
                } else {
                    if (rng() & 1U)
                        std::swap(first, second);
                    target(first) = half + gap / 2.0;
                    target(second) = half - gap / 2.0;
                    label = canonicalize_annotation(static_cast<Emotion>(first), static_cast<Emotion>(second), 70);
                }
            }
            Distribution p = noisy(target, cfg, rng);
            p /= p.sum();
            data.predictions.rows[vid].push_back(p);
            data.predictions.actor_of[vid] = actor;
            records.push_back({vid, actor, label});
        }
    }
    data.manifest = Manifest(std::move(records));
    return data;
}

FoldAssignment folds_by_gap(const SynthData& data, int k)
{
    std::vector<std::pair<double, std::string>> actors;
    for (const auto& [actor, gap] : data.actor_gap)
        actors.emplace_back(gap, actor);
    if (k < 2 || static_cast<std::size_t>(k) > actors.size())
        throw ValidationError("folds_by_gap: need 2 <= k <= actor count");
    std::sort(actors.begin(), actors.end());
    std::map<std::string, int> m;
    const std::size_t base = actors.size() / static_cast<std::size_t>(k);
    const std::size_t extra = actors.size() % static_cast<std::size_t>(k);
    std::size_t pos = 0;
    for (int f = 0; f < k; ++f) {
        const std::size_t len = base + (static_cast<std::size_t>(f) < extra ? 1 : 0);
        for (std::size_t i = 0; i < len; ++i)
            m[actors[pos++].second] = f;
    }
    return FoldAssignment(std::move(m), k);
}

std::vector<FrameFeatureSequence> synth_features(const SynthData& data, int layers, int frames, int dims,
                                                 double scale, double noise, std::uint64_t seed)
{
    if (layers < 1 || frames < 1 || dims < 1)
        throw ConfigError("synth_features: layers, frames and dims must be positive");
    std::vector<FrameFeatureSequence> out;
    std::mt19937_64 rng(mix_seed(seed));
    for (const auto& r : data.manifest.records()) {
        const SoftLabel y = r.annotation ? encode_soft_label(*r.annotation) : SoftLabel::Constant(1.0 / 6);
        FrameFeatureSequence seq;
        seq.video_id = r.video_id;
        for (int l = 0; l < layers; ++l) {
            Eigen::MatrixXd m(frames, dims);
            for (int t = 0; t < frames; ++t)
                for (int d = 0; d < dims; ++d)
                    m(t, d) = scale * y(d % kNumEmotions) + noise * standard_normal(rng);
            seq.layers.push_back(std::move(m));
        }
        out.push_back(std::move(seq));
    }
    return out;
}

} // namespace blendfuse
