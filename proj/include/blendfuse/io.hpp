#pragma once

#include "blendfuse/core.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace blendfuse::io {

inline constexpr std::string_view kPredictionsHeader =
    "video_id,actor_id,p_anger,p_disgust,p_fear,p_happiness,p_sadness,p_surprise";
inline constexpr std::string_view kLabelsHeader = "video_id,actor_id,emotion_a,emotion_b,salience_a";

// Shortest decimal that parses back to the same double.
std::string format_double(double x);
std::string format_fixed(double x, int decimals);
double parse_double(std::string_view s);
long long parse_int(std::string_view s);

std::vector<std::string> split(std::string_view line, char sep = ',');

// Line-oriented CSV reader: strips CR, skips blank lines, checks column count.
class CsvReader {
public:
    CsvReader(const std::filesystem::path& path, std::string_view expected_header);
    // Variant for headers checked by the caller.
    explicit CsvReader(const std::filesystem::path& path);

    const std::vector<std::string>& header() const { return header_; }
    bool next(std::vector<std::string>& fields);
    std::size_t line_number() const { return line_no_; }
    std::string where() const;

private:
    std::filesystem::path path_;
    std::string text_;
    std::size_t pos_ = 0;
    std::size_t line_no_ = 0;
    std::vector<std::string> header_;
};

std::string read_text(const std::filesystem::path& path);
// Writes through a temporary and renames so readers never see partial files.
void write_text(const std::filesystem::path& path, std::string_view content);

// Predictions file for one encoder; the encoder name is taken from the file stem
// unless given. Rows failing the simplex check by <= 1e-3 are renormalized and
// reported through `warnings`.
EncoderPredictionSet read_predictions(const std::filesystem::path& path, std::string encoder_name = {},
                                      std::vector<std::string>* warnings = nullptr);
std::string format_predictions(const EncoderPredictionSet& set);
void write_predictions(const std::filesystem::path& path, const EncoderPredictionSet& set);

// All *.csv files in a directory, sorted by name.
std::vector<EncoderPredictionSet> read_prediction_dir(const std::filesystem::path& dir,
                                                      std::vector<std::string>* warnings = nullptr);

// Labels file doubles as the sample manifest; rows with an empty emotion_a are unlabeled.
Manifest read_labels(const std::filesystem::path& path);
std::string format_labels(const Manifest& manifest);
void write_labels(const std::filesystem::path& path, const Manifest& manifest);

} // namespace blendfuse::io
