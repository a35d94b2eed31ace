#include "blendfuse/features.hpp"

#include "blendfuse/io.hpp"

#include <cstdio>
#include <sstream>

namespace blendfuse {

namespace fs = std::filesystem;

std::string_view stat_name(TemporalStat s)
{
    switch (s) {
    case TemporalStat::segment_mean: return "segment_mean";
    case TemporalStat::segment_std: return "segment_std";
    case TemporalStat::global_mean: return "global_mean";
    case TemporalStat::global_median: return "global_median";
    }
    return "?";
}

TemporalStat parse_stat(std::string_view name)
{
    for (auto s : {TemporalStat::segment_mean, TemporalStat::segment_std, TemporalStat::global_mean,
                   TemporalStat::global_median})
        if (stat_name(s) == name)
            return s;
    throw ConfigError("unknown temporal statistic '" + std::string(name) + "'");
}

Eigen::Index AggregationConfig::output_dim(Eigen::Index dims) const
{
    Eigen::Index seg = 0, glob = 0;
    for (auto s : stats)
        (is_segment_stat(s) ? seg : glob) += 1;
    return (segments * seg + glob) * dims;
}

void AggregationConfig::validate() const
{
    if (segments < 1)
        throw ConfigError("segments must be >= 1");
    if (layer_lo < 0 || layer_hi < layer_lo)
        throw ConfigError("invalid layer range");
    if (stats.empty())
        throw ConfigError("aggregation needs at least one statistic");
}

std::vector<std::pair<Eigen::Index, Eigen::Index>> segment_bounds(Eigen::Index frames, int segments)
{
    std::vector<std::pair<Eigen::Index, Eigen::Index>> out;
    const Eigen::Index base = frames / segments;
    const Eigen::Index extra = frames % segments;
    Eigen::Index start = 0;
    for (Eigen::Index s = 0; s < segments; ++s) {
        const Eigen::Index len = base + (s < extra ? 1 : 0);
        out.emplace_back(start, len);
        start += len;
    }
    return out;
}

FrameFeatureSequence read_feature_file(const fs::path& path, std::string video_id)
{
    const std::string text = io::read_text(path);
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line))
        throw ValidationError(path.string() + ": empty feature file");
    if (!line.empty() && line.back() == '\r')
        line.pop_back();

    long long L = 0, T = 0, D = 0;
    {
        std::istringstream h(line);
        std::string tok;
        int seen = 0;
        while (h >> tok) {
            auto eq = tok.find('=');
            if (eq == std::string::npos)
                throw ValidationError(path.string() + ": malformed header token '" + tok + "'");
            const std::string key = tok.substr(0, eq);
            const long long v = io::parse_int(std::string_view(tok).substr(eq + 1));
            if (key == "layers") L = v;
            else if (key == "frames") T = v;
            else if (key == "dims") D = v;
            else throw ValidationError(path.string() + ": unknown header key '" + key + "'");
            ++seen;
        }
        if (seen != 3 || L < 1 || T < 1 || D < 1)
            throw ValidationError(path.string() + ": header must be 'layers=L frames=T dims=D' with positive values");
    }

    FrameFeatureSequence seq;
    seq.video_id = std::move(video_id);
    seq.layers.assign(static_cast<std::size_t>(L), Eigen::MatrixXd(T, D));
    std::size_t line_no = 1;
    for (long long l = 0; l < L; ++l) {
        for (long long t = 0; t < T; ++t) {
            do {
                if (!std::getline(in, line))
                    throw ValidationError(path.string() + ": expected " + std::to_string(L * T) + " data rows");
                ++line_no;
                if (!line.empty() && line.back() == '\r')
                    line.pop_back();
            } while (line.empty());
            std::istringstream row(line);
            std::string tok;
            long long d = 0;
            while (row >> tok) {
                if (d >= D)
                    throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": too many values");
                seq.layers[static_cast<std::size_t>(l)](t, d++) = io::parse_double(tok);
            }
            if (d != D)
                throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                                      std::to_string(D) + " values");
        }
    }
    while (std::getline(in, line))
        if (line.find_first_not_of(" \t\r") != std::string::npos)
            throw ValidationError(path.string() + ": trailing data after " + std::to_string(L * T) + " rows");
    return seq;
}

void write_feature_file(const fs::path& path, const FrameFeatureSequence& seq)
{
    std::string out = "layers=" + std::to_string(seq.num_layers()) + " frames=" + std::to_string(seq.frames()) +
                      " dims=" + std::to_string(seq.dims()) + "\n";
    for (const auto& layer : seq.layers) {
        for (Eigen::Index t = 0; t < layer.rows(); ++t) {
            for (Eigen::Index d = 0; d < layer.cols(); ++d) {
                if (d)
                    out += ' ';
                out += io::format_double(layer(t, d));
            }
            out += '\n';
        }
    }
    io::write_text(path, out);
}

std::vector<FeatureManifestEntry> read_feature_manifest(const fs::path& dir)
{
    io::CsvReader reader(dir / "manifest.csv", "video_id,actor_id,path");
    std::vector<FeatureManifestEntry> out;
    std::vector<std::string> f;
    while (reader.next(f)) {
        fs::path p = f[2];
        if (p.is_relative())
            p = dir / p;
        out.push_back({f[0], f[1], p});
    }
    return out;
}

void write_feature_manifest(const fs::path& dir, const std::vector<FeatureManifestEntry>& entries)
{
    std::string out = "video_id,actor_id,path\n";
    for (const auto& e : entries)
        out += e.video_id + "," + e.actor_id + "," + e.path.generic_string() + "\n";
    io::write_text(dir / "manifest.csv", out);
}

} // namespace blendfuse
