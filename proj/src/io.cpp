#include "blendfuse/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace blendfuse::io {

namespace fs = std::filesystem;

std::string format_double(double x)
{
    if (x == 0.0)
        return "0";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

std::string format_fixed(double x, int decimals)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, x);
    return buf;
}

double parse_double(std::string_view s)
{
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ValidationError("not a decimal number: '" + std::string(s) + "'");
    if (!std::isfinite(v))
        throw ValidationError("non-finite number: '" + std::string(s) + "'");
    return v;
}

long long parse_int(std::string_view s)
{
    long long v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ValidationError("not an integer: '" + std::string(s) + "'");
    return v;
}

std::vector<std::string> split(std::string_view line, char sep)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto p = line.find(sep, start);
        if (p == std::string_view::npos) {
            out.emplace_back(line.substr(start));
            return out;
        }
        out.emplace_back(line.substr(start, p - start));
        start = p + 1;
    }
}

std::string read_text(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ValidationError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, std::string_view content)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw ValidationError("cannot write '" + path.string() + "'");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out)
            throw ValidationError("write failed for '" + path.string() + "'");
    }
    fs::rename(tmp, path);
}

CsvReader::CsvReader(const fs::path& path)
    : path_(path), text_(read_text(path))
{
    std::vector<std::string> fields;
    if (!next(fields))
        throw ValidationError(path_.string() + ": empty file");
    header_ = fields;
}

CsvReader::CsvReader(const fs::path& path, std::string_view expected_header)
    : CsvReader(path)
{
    std::string joined;
    for (std::size_t i = 0; i < header_.size(); ++i)
        joined += (i ? "," : "") + header_[i];
    if (joined != expected_header)
        throw ValidationError(path_.string() + ": header must be exactly '" + std::string(expected_header) +
                              "', got '" + joined + "'");
}

bool CsvReader::next(std::vector<std::string>& fields)
{
    while (pos_ < text_.size()) {
        auto end = text_.find('\n', pos_);
        if (end == std::string::npos)
            end = text_.size();
        std::string_view line(text_.data() + pos_, end - pos_);
        pos_ = end + 1;
        ++line_no_;
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        if (line.empty())
            continue;
        fields = split(line);
        if (!header_.empty() && fields.size() != header_.size())
            throw ValidationError(where() + ": expected " + std::to_string(header_.size()) + " fields, got " +
                                  std::to_string(fields.size()));
        return true;
    }
    return false;
}

std::string CsvReader::where() const
{
    return path_.string() + ":" + std::to_string(line_no_);
}

EncoderPredictionSet read_predictions(const fs::path& path, std::string encoder_name,
                                      std::vector<std::string>* warnings)
{
    EncoderPredictionSet set;
    set.encoder_name = encoder_name.empty() ? path.stem().string() : std::move(encoder_name);
    CsvReader reader(path, kPredictionsHeader);
    std::vector<std::string> f;
    while (reader.next(f)) {
        if (f[0].empty())
            throw ValidationError(reader.where() + ": empty video_id");
        Distribution p;
        for (int i = 0; i < kNumEmotions; ++i)
            p(i) = parse_double(f[static_cast<std::size_t>(2 + i)]);
        try {
            if (check_distribution(p) == SimplexCheck::renormalized && warnings)
                warnings->push_back(reader.where() + ": renormalized probability row");
        } catch (const ValidationError& e) {
            throw ValidationError(reader.where() + ": " + e.what());
        }
        auto [it, inserted] = set.actor_of.emplace(f[0], f[1]);
        if (!inserted && it->second != f[1])
            throw ValidationError(reader.where() + ": video '" + f[0] + "' listed under two actors");
        set.rows[f[0]].push_back(p);
    }
    return set;
}

std::string format_predictions(const EncoderPredictionSet& set)
{
    std::string out(kPredictionsHeader);
    out += '\n';
    for (const auto& [vid, clips] : set.rows) {
        auto a = set.actor_of.find(vid);
        const std::string actor = a == set.actor_of.end() ? std::string() : a->second;
        for (const auto& p : clips) {
            out += vid + "," + actor;
            for (int i = 0; i < kNumEmotions; ++i)
                out += "," + format_double(p(i));
            out += '\n';
        }
    }
    return out;
}

void write_predictions(const fs::path& path, const EncoderPredictionSet& set)
{
    write_text(path, format_predictions(set));
}

std::vector<EncoderPredictionSet> read_prediction_dir(const fs::path& dir, std::vector<std::string>* warnings)
{
    if (!fs::is_directory(dir))
        throw ValidationError("not a directory: '" + dir.string() + "'");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".csv")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    std::vector<EncoderPredictionSet> sets;
    for (const auto& f : files)
        sets.push_back(read_predictions(f, {}, warnings));
    if (sets.empty())
        throw ValidationError("no prediction files in '" + dir.string() + "'");
    return sets;
}

Manifest read_labels(const fs::path& path)
{
    CsvReader reader(path, kLabelsHeader);
    std::vector<SampleRecord> records;
    std::vector<std::string> f;
    while (reader.next(f)) {
        SampleRecord r{f[0], f[1], std::nullopt};
        if (r.video_id.empty() || r.actor_id.empty())
            throw ValidationError(reader.where() + ": empty video_id or actor_id");
        try {
            if (!f[2].empty()) {
                std::optional<Emotion> b;
                if (!f[3].empty())
                    b = parse_emotion(f[3]);
                r.annotation = canonicalize_annotation(parse_emotion(f[2]), b, static_cast<int>(parse_int(f[4])));
            } else if (!f[3].empty() || !f[4].empty()) {
                throw ValidationError("emotion_b/salience_a given without emotion_a");
            }
        } catch (const ValidationError& e) {
            throw ValidationError(reader.where() + ": " + e.what());
        }
        records.push_back(std::move(r));
    }
    return Manifest(std::move(records));
}

std::string format_labels(const Manifest& manifest)
{
    std::string out(kLabelsHeader);
    out += '\n';
    for (const auto& r : manifest.records()) {
        out += r.video_id + "," + r.actor_id + ",";
        if (r.annotation) {
            const Blend& b = *r.annotation;
            out += std::string(emotion_name(b.primary)) + ",";
            if (b.secondary)
                out += std::string(emotion_name(*b.secondary));
            out += "," + std::to_string(b.salience_primary);
        } else {
            out += ",,";
        }
        out += '\n';
    }
    return out;
}

void write_labels(const fs::path& path, const Manifest& manifest)
{
    write_text(path, format_labels(manifest));
}

} // namespace blendfuse::io
