#include "run_config.hpp"

#include "blendfuse/io.hpp"

#include <cstdio>
#include <fstream>
#include <set>

namespace blendfuse::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t fnv1a64(std::string_view data)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

// Checks an object's keys against an allow-list before anything is read.
const json& object_with(const json& j, const std::string& where, std::initializer_list<std::string_view> keys)
{
    if (!j.is_object())
        throw ConfigError("config: '" + where + "' must be an object");
    std::set<std::string_view> allowed(keys);
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key))
            throw ConfigError("config: unknown key '" + (where.empty() ? key : where + "." + key) + "'");
    return j;
}

template <typename T>
void get(const json& j, const char* key, T& out, const std::string& where)
{
    if (!j.contains(key))
        return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("config: bad value for '" + where + key + "': " + e.what());
    }
}

void get_path(const json& j, const char* key, fs::path& out, const std::string& where)
{
    std::string s;
    get(j, key, s, where);
    if (!s.empty())
        out = s;
}

GridSpec read_grid(const json& j, const std::string& where)
{
    object_with(j, where, {"lo", "hi", "step"});
    GridSpec g;
    get(j, "lo", g.lo, where + ".");
    get(j, "hi", g.hi, where + ".");
    get(j, "step", g.step, where + ".");
    return g;
}

json grid_json(const GridSpec& g) { return {{"lo", g.lo}, {"hi", g.hi}, {"step", g.step}}; }

template <typename F>
auto config_guard(F&& f) -> decltype(f())
{
    // Parsers in the library report bad names as validation errors; inside a
    // config file they are configuration mistakes.
    try {
        return f();
    } catch (const ValidationError& e) {
        throw ConfigError(e.what());
    }
}

} // namespace

RunConfig RunConfig::from_json(const json& j)
{
    object_with(j, "", {"paths", "k", "seed", "threads", "thresholds", "fusion", "aggregation", "mlp",
                        "encoder_name", "synth", "identities"});
    RunConfig c;
    get(j, "k", c.k, "");
    get(j, "seed", c.seed, "");
    get(j, "threads", c.threads, "");
    get(j, "encoder_name", c.encoder_name, "");

    if (j.contains("paths")) {
        const json& p = object_with(j["paths"], "paths",
                                    {"predictions_dir", "labels", "folds", "features_dir", "weights", "results",
                                     "output_dir"});
        get_path(p, "predictions_dir", c.predictions_dir, "paths.");
        get_path(p, "labels", c.labels, "paths.");
        get_path(p, "folds", c.folds, "paths.");
        get_path(p, "features_dir", c.features_dir, "paths.");
        get_path(p, "weights", c.weights, "paths.");
        get_path(p, "results", c.results, "paths.");
        get_path(p, "output_dir", c.output_dir, "paths.");
    }

    if (j.contains("thresholds")) {
        const json& t = object_with(j["thresholds"], "thresholds",
                                    {"alpha_grid", "beta_grid", "strategy", "neutral_index",
                                     "renormalize_survivors", "search"});
        if (t.contains("alpha_grid"))
            c.alpha_grid = read_grid(t["alpha_grid"], "thresholds.alpha_grid");
        if (t.contains("beta_grid"))
            c.beta_grid = read_grid(t["beta_grid"], "thresholds.beta_grid");
        if (t.contains("strategy")) {
            std::string s;
            get(t, "strategy", s, "thresholds.");
            c.threshold_strategy = config_guard([&] { return parse_threshold_strategy(s); });
        }
        if (t.contains("neutral_index") && !t["neutral_index"].is_null()) {
            int n = 0;
            get(t, "neutral_index", n, "thresholds.");
            c.neutral_index = n;
        }
        get(t, "renormalize_survivors", c.renormalize_survivors, "thresholds.");
        if (t.contains("search") && !t["search"].is_null()) {
            const json& s = object_with(t["search"], "thresholds.search", {"alpha", "beta"});
            ThresholdPair tp;
            get(s, "alpha", tp.alpha, "thresholds.search.");
            get(s, "beta", tp.beta, "thresholds.search.");
            c.search_thresholds = tp;
        }
    }

    if (j.contains("fusion")) {
        const json& f = object_with(j["fusion"], "fusion", {"strategy", "grid_step", "joint_thresholds"});
        if (f.contains("strategy")) {
            std::string s;
            get(f, "strategy", s, "fusion.");
            c.fusion_strategy = config_guard([&] { return parse_fusion_strategy(s); });
        }
        get(f, "grid_step", c.grid_step, "fusion.");
        get(f, "joint_thresholds", c.joint_thresholds, "fusion.");
    }

    if (j.contains("aggregation")) {
        const json& a = object_with(j["aggregation"], "aggregation", {"layer_lo", "layer_hi", "segments", "stats"});
        get(a, "layer_lo", c.aggregation.layer_lo, "aggregation.");
        get(a, "layer_hi", c.aggregation.layer_hi, "aggregation.");
        get(a, "segments", c.aggregation.segments, "aggregation.");
        if (a.contains("stats")) {
            std::vector<std::string> names;
            get(a, "stats", names, "aggregation.");
            c.aggregation.stats.clear();
            for (const auto& n : names)
                c.aggregation.stats.push_back(config_guard([&] { return parse_stat(n); }));
        }
    }

    if (j.contains("mlp")) {
        const json& m = object_with(j["mlp"], "mlp",
                                    {"hidden_dims", "dropout", "lr", "momentum", "max_epochs", "patience",
                                     "batch_size"});
        get(m, "hidden_dims", c.mlp.hidden_dims, "mlp.");
        get(m, "dropout", c.mlp.dropout, "mlp.");
        get(m, "lr", c.mlp.lr, "mlp.");
        get(m, "momentum", c.mlp.momentum, "mlp.");
        get(m, "max_epochs", c.mlp.max_epochs, "mlp.");
        get(m, "patience", c.mlp.patience, "mlp.");
        get(m, "batch_size", c.mlp.batch_size, "mlp.");
    }

    if (j.contains("synth")) {
        const json& s = object_with(j["synth"], "synth",
                                    {"n_actors", "clips_per_actor", "label_mix", "gap_range", "noise_sigma",
                                     "top2_mass", "single_peak", "truncation", "folds", "features"});
        get(s, "n_actors", c.synth.n_actors, "synth.");
        get(s, "clips_per_actor", c.synth.clips_per_actor, "synth.");
        get(s, "noise_sigma", c.synth.noise_sigma, "synth.");
        get(s, "top2_mass", c.synth.top2_mass, "synth.");
        get(s, "single_peak", c.synth.single_peak, "synth.");
        get(s, "truncation", c.synth.truncation, "synth.");
        get(s, "folds", c.synth_folds, "synth.");
        if (s.contains("label_mix")) {
            const json& m = object_with(s["label_mix"], "synth.label_mix", {"single", "fifty", "seventy"});
            get(m, "single", c.synth.label_mix.single, "synth.label_mix.");
            get(m, "fifty", c.synth.label_mix.fifty, "synth.label_mix.");
            get(m, "seventy", c.synth.label_mix.seventy, "synth.label_mix.");
        }
        if (s.contains("gap_range")) {
            std::vector<double> r;
            get(s, "gap_range", r, "synth.");
            if (r.size() != 2)
                throw ConfigError("config: synth.gap_range must be [lo, hi]");
            c.synth.gap_lo = r[0];
            c.synth.gap_hi = r[1];
        }
        if (s.contains("features")) {
            const json& f = object_with(s["features"], "synth.features", {"enabled", "dims", "frames", "noise"});
            get(f, "enabled", c.synth_features, "synth.features.");
            get(f, "dims", c.synth_feature_dims, "synth.features.");
            get(f, "frames", c.synth_feature_frames, "synth.features.");
            get(f, "noise", c.synth_feature_noise, "synth.features.");
        }
    }

    if (j.contains("identities")) {
        const json& v = object_with(j["identities"], "identities", {"tolerance", "published"});
        get(v, "tolerance", c.identity_tolerance, "identities.");
        get(v, "published", c.published, "identities.");
    }
    return c;
}

RunConfig RunConfig::load(const fs::path& path)
{
    if (!fs::exists(path))
        throw ConfigError("config file not found: " + path.string());
    json j;
    try {
        j = json::parse(io::read_text(path));
    } catch (const json::parse_error& e) {
        throw ConfigError("config: " + path.string() + ": " + e.what());
    }
    RunConfig c = from_json(j);
    // Relative paths in a config file are relative to the file itself.
    const fs::path base = path.parent_path();
    for (fs::path* p : {&c.predictions_dir, &c.labels, &c.folds, &c.features_dir, &c.weights, &c.results,
                        &c.output_dir})
        if (!p->empty() && p->is_relative())
            *p = base / *p;
    return c;
}

json RunConfig::to_json() const
{
    json j;
    j["paths"] = {{"predictions_dir", predictions_dir.generic_string()},
                  {"labels", labels.generic_string()},
                  {"folds", folds.generic_string()},
                  {"features_dir", features_dir.generic_string()},
                  {"weights", weights.generic_string()},
                  {"results", results.generic_string()},
                  {"output_dir", output_dir.generic_string()}};
    j["k"] = k;
    j["seed"] = seed;
    j["threads"] = threads;
    j["encoder_name"] = encoder_name;

    json t;
    t["alpha_grid"] = grid_json(alpha_grid);
    t["beta_grid"] = grid_json(beta_grid);
    t["strategy"] = std::string(strategy_name(threshold_strategy));
    t["neutral_index"] = neutral_index ? json(*neutral_index) : json(nullptr);
    t["renormalize_survivors"] = renormalize_survivors;
    t["search"] = search_thresholds ? json{{"alpha", search_thresholds->alpha}, {"beta", search_thresholds->beta}}
                                    : json(nullptr);
    j["thresholds"] = t;

    j["fusion"] = {{"strategy", std::string(strategy_name(fusion_strategy))},
                   {"grid_step", grid_step},
                   {"joint_thresholds", joint_thresholds}};

    std::vector<std::string> stats;
    for (TemporalStat s : aggregation.stats)
        stats.emplace_back(stat_name(s));
    j["aggregation"] = {{"layer_lo", aggregation.layer_lo},
                        {"layer_hi", aggregation.layer_hi},
                        {"segments", aggregation.segments},
                        {"stats", stats}};

    j["mlp"] = {{"hidden_dims", mlp.hidden_dims}, {"dropout", mlp.dropout},       {"lr", mlp.lr},
                {"momentum", mlp.momentum},       {"max_epochs", mlp.max_epochs}, {"patience", mlp.patience},
                {"batch_size", mlp.batch_size}};

    j["synth"] = {{"n_actors", synth.n_actors},
                  {"clips_per_actor", synth.clips_per_actor},
                  {"label_mix",
                   {{"single", synth.label_mix.single},
                    {"fifty", synth.label_mix.fifty},
                    {"seventy", synth.label_mix.seventy}}},
                  {"gap_range", {synth.gap_lo, synth.gap_hi}},
                  {"noise_sigma", synth.noise_sigma},
                  {"top2_mass", synth.top2_mass},
                  {"single_peak", synth.single_peak},
                  {"truncation", synth.truncation},
                  {"folds", synth_folds},
                  {"features",
                   {{"enabled", synth_features},
                    {"dims", synth_feature_dims},
                    {"frames", synth_feature_frames},
                    {"noise", synth_feature_noise}}}};

    j["identities"] = {{"tolerance", identity_tolerance}, {"published", published}};
    return j;
}

std::string RunConfig::hash() const
{
    json j = to_json();
    // Where results go does not change what they are; thread count likewise.
    j["paths"].erase("output_dir");
    j.erase("threads");
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(j.dump())));
    return buf;
}

PipelineConfig RunConfig::pipeline() const
{
    PipelineConfig p;
    p.weight_search.strategy = fusion_strategy;
    p.weight_search.grid_step = grid_step;
    p.weight_search.joint_thresholds = joint_thresholds;
    p.weight_search.alpha_grid = config_guard([&] { return alpha_grid.values(); });
    p.weight_search.beta_grid = config_guard([&] { return beta_grid.values(); });
    p.threshold_strategy = threshold_strategy;
    p.neutral_index = neutral_index;
    p.renormalize_survivors = renormalize_survivors;
    p.search_thresholds = search_thresholds;
    p.threads = threads;
    config_guard([&] {
        p.validate();
        return 0;
    });
    return p;
}

void RunConfig::check_paths() const
{
    std::vector<std::string> missing;
    for (const fs::path* p : {&predictions_dir, &labels, &folds, &features_dir, &weights, &results})
        if (!p->empty() && !fs::exists(*p))
            missing.push_back(p->string());
    if (!missing.empty()) {
        std::string msg = "config: referenced paths do not exist:";
        for (const auto& m : missing)
            msg += " " + m;
        throw ConfigError(msg);
    }
    if (k < 2)
        throw ConfigError("config: k must be >= 2");
    if (threads < 1)
        throw ConfigError("config: threads must be >= 1");
}

} // namespace blendfuse::cli
