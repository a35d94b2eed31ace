#pragma once

#include "blendfuse/core.hpp"
#include "blendfuse/eval.hpp"
#include "blendfuse/features.hpp"
#include "blendfuse/random.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace blendfuse {

struct LabelMix {
    double single = 0.46;
    double fifty = 0.18;
    double seventy = 0.36;
};

// Synthetic actor population. Each actor draws one dominant-vs-secondary gap
// for its 70/30 clips; probability rows are built around fixed top-2 masses
// and perturbed by truncated Gaussian noise on the logits.
struct SynthConfig {
    int n_actors = 43;
    int clips_per_actor = 57;
    LabelMix label_mix;
    double gap_lo = 0.05;
    double gap_hi = 0.45;
    double noise_sigma = 0.1;
    std::uint64_t seed = 0;

    double top2_mass = 0.8;   // p1 + p2 on blend clips
    double single_peak = 0.75; // p1 on single clips
    double truncation = 2.0;  // noise clipped at +-truncation * sigma (by rejection)

    void validate() const;
};

struct SynthData {
    Manifest manifest;
    EncoderPredictionSet predictions;
    std::map<std::string, double> actor_gap;
};

SynthData generate(const SynthConfig& cfg);

// Actors sorted by gap (ties by id) and cut into k contiguous groups whose
// sizes differ by at most one.
FoldAssignment folds_by_gap(const SynthData& data, int k);

// Per-video frame features whose every frame is a noisy linear image of the
// soft label: frame[t][d] = scale * y[d mod 6] + N(0, noise^2).
std::vector<FrameFeatureSequence> synth_features(const SynthData& data, int layers, int frames, int dims,
                                                 double scale, double noise, std::uint64_t seed);

} // namespace blendfuse
