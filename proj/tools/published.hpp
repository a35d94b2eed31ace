#pragma once

#include <map>
#include <string>
#include <vector>

namespace blendfuse::cli {

// Published accuracy triples, 3-decimal rounded as printed.
struct ScoreTriple {
    std::string group;
    std::string name;
    double acc_p;
    double acc_s;
    double score;
};

inline const std::vector<ScoreTriple>& published_score_triples()
{
    static const std::vector<ScoreTriple> rows = {
        {"single-encoder cv", "S4D-ViTMoE (face)", .340, .140, .240},
        {"single-encoder cv", "Gemini Embed. 2.0 (2s)", .320, .137, .223},
        {"single-encoder cv", "VideoMAE body (ft)", .291, .144, .218},
        {"single-encoder cv", "Wav2Vec2 frozen+MLP-1024", .294, .120, .207},
        {"single-encoder cv", "TimeSformer body (ft)", .259, .131, .195},
        {"single-encoder cv", "Wav2Vec2 frozen+MLP-512", .264, .104, .184},
        {"single-encoder cv", "Wav2Vec2 finetuned E2E", .234, .088, .161},
        {"single-encoder cv", "HiCMAE", .298, .180, .239},
        {"single-encoder cv", "ImageBind", .290, .130, .210},
        {"single-encoder cv", "WavLM", .265, .121, .193},
        {"single-encoder cv", "VideoMAEv2", .273, .106, .190},
        {"baseline test", "VideoMAEv2 + HuBERT", .332, .114, .223},
        {"baseline test", "ImageBind + WavLM", .327, .114, .221},
        {"baseline test", "HiCMAE", .268, .180, .224},
        {"fusion test", "S4D + Wav2Vec2", .327, .159, .243},
        {"fusion test", "9-encoder ensemble", .357, .168, .262},
        {"fusion test", "12-enc + Gemini", .391, .168, .279},
        {"fusion cv", "S4D face only", .340, .140, .240},
        {"fusion cv", "S4D + Wav2Vec2", .357, .175, .266},
        {"fusion cv", "9-encoder", .414, .205, .309},
        {"fusion cv", "12-encoder + Gemini", .418, .204, .311},
    };
    return rows;
}

// Learned fusion weights of the two published ensembles.
inline const std::map<std::string, std::map<std::string, double>>& published_weight_columns()
{
    static const std::map<std::string, std::map<std::string, double>> cols = {
        {"9-enc",
         {{"S4D-ViTMoE (face)", .094},
          {"Wav2Vec2 (audio)", .170},
          {"HiCMAE", .261},
          {"WavLM", .156},
          {"ImageBind", .050},
          {"CLIP", .071},
          {"DINOv2", .041},
          {"DINOv3", .092},
          {"VideoSwin", .064}}},
        {"12-enc",
         {{"S4D-ViTMoE (face)", .117},
          {"Wav2Vec2 (audio)", .111},
          {"Gemini Embed. 2.0", .192},
          {"TimeSformer (body)", .090},
          {"VideoMAE (body)", .110},
          {"HiCMAE", .103},
          {"WavLM", .124},
          {"ImageBind", .079},
          {"DINOv3", .042},
          {"VideoSwin", .032}}},
    };
    return cols;
}

} // namespace blendfuse::cli
