#pragma once

#include "blendfuse/core.hpp"

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

namespace blendfuse {

// Hidden states of one video: `layers` matrices of shape frames x dims.
template <typename Scalar>
struct FrameFeatureSequenceT {
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    std::string video_id;
    std::vector<Matrix> layers;

    Eigen::Index num_layers() const { return static_cast<Eigen::Index>(layers.size()); }
    Eigen::Index frames() const { return layers.empty() ? 0 : layers.front().rows(); }
    Eigen::Index dims() const { return layers.empty() ? 0 : layers.front().cols(); }
};

using FrameFeatureSequence = FrameFeatureSequenceT<double>;

enum class TemporalStat { segment_mean, segment_std, global_mean, global_median };

std::string_view stat_name(TemporalStat s);
TemporalStat parse_stat(std::string_view name);
inline bool is_segment_stat(TemporalStat s)
{
    return s == TemporalStat::segment_mean || s == TemporalStat::segment_std;
}

struct AggregationConfig {
    int layer_lo = 0;
    int layer_hi = 0;
    int segments = 3;
    std::vector<TemporalStat> stats = {TemporalStat::segment_mean, TemporalStat::segment_std,
                                       TemporalStat::global_mean};

    Eigen::Index output_dim(Eigen::Index dims) const;
    void validate() const;
};

// Elementwise mean over the inclusive layer range [lo, hi].
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> average_layers(const FrameFeatureSequenceT<Scalar>& seq,
                                                                     int lo, int hi)
{
    if (lo < 0 || hi < lo || hi >= seq.num_layers())
        throw ValidationError("average_layers: layer range [" + std::to_string(lo) + ", " + std::to_string(hi) +
                              "] invalid for " + std::to_string(seq.num_layers()) + " layers");
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> acc = seq.layers[static_cast<std::size_t>(lo)];
    for (int l = lo + 1; l <= hi; ++l)
        acc += seq.layers[static_cast<std::size_t>(l)];
    if (hi > lo)
        acc /= static_cast<Scalar>(hi - lo + 1);
    return acc;
}

// Start row and length of each segment; earlier segments take the remainder.
std::vector<std::pair<Eigen::Index, Eigen::Index>> segment_bounds(Eigen::Index frames, int segments);

// Per-segment statistics (segment-major, config order) followed by global
// statistics. Standard deviations are population std.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> aggregate_temporal(const Eigen::MatrixBase<Derived>& frames,
                                                                               const AggregationConfig& cfg)
{
    using Scalar = typename Derived::Scalar;
    using Row = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
    cfg.validate();
    const Eigen::Index T = frames.rows();
    const Eigen::Index D = frames.cols();
    if (T < cfg.segments)
        throw ValidationError("aggregate_temporal: " + std::to_string(T) + " frames for " +
                              std::to_string(cfg.segments) + " segments");

    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(cfg.output_dim(D));
    Eigen::Index pos = 0;
    auto put = [&](const Row& r) {
        out.segment(pos, D) = r.transpose();
        pos += D;
    };

    for (auto [start, len] : segment_bounds(T, cfg.segments)) {
        const auto block = frames.middleRows(start, len);
        const Row mean = block.colwise().sum() / static_cast<Scalar>(len);
        for (TemporalStat s : cfg.stats) {
            if (s == TemporalStat::segment_mean) {
                put(mean);
            } else if (s == TemporalStat::segment_std) {
                const Row var = (block.rowwise() - mean).array().square().colwise().sum() / static_cast<Scalar>(len);
                put(var.array().sqrt().matrix());
            }
        }
    }
    for (TemporalStat s : cfg.stats) {
        if (s == TemporalStat::global_mean) {
            put(frames.colwise().sum() / static_cast<Scalar>(T));
        } else if (s == TemporalStat::global_median) {
            Row med(D);
            std::vector<Scalar> col(static_cast<std::size_t>(T));
            for (Eigen::Index d = 0; d < D; ++d) {
                for (Eigen::Index t = 0; t < T; ++t)
                    col[static_cast<std::size_t>(t)] = frames(t, d);
                std::sort(col.begin(), col.end());
                const auto h = static_cast<std::size_t>(T / 2);
                med(d) = (T % 2) ? col[h] : (col[h - 1] + col[h]) / Scalar(2);
            }
            put(med);
        }
    }
    return out;
}

// `<video_id>.feat`: "layers=L frames=T dims=D", then L*T rows of D values.
FrameFeatureSequence read_feature_file(const std::filesystem::path& path, std::string video_id);
void write_feature_file(const std::filesystem::path& path, const FrameFeatureSequence& seq);

struct FeatureManifestEntry {
    std::string video_id;
    std::string actor_id;
    std::filesystem::path path;
};

// `manifest.csv` with `video_id,actor_id,path`; relative paths resolve against the directory.
std::vector<FeatureManifestEntry> read_feature_manifest(const std::filesystem::path& dir);
void write_feature_manifest(const std::filesystem::path& dir, const std::vector<FeatureManifestEntry>& entries);

} // namespace blendfuse
