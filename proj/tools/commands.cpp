#include "commands.hpp"

#include "published.hpp"
#include "report.hpp"

#include "blendfuse/io.hpp"
#include "blendfuse/labels.hpp"
#include "blendfuse/random.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <iostream>
#include <optional>
#include <set>

namespace blendfuse::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Collects every file a command writes so the provenance record can list them.
// Data files go through here; run_metadata.json is the only file that carries
// a timestamp.
class OutputDir {
public:
    OutputDir(const RunConfig& cfg, std::string command)
        : root_(cfg.output_dir), command_(std::move(command)), hash_(cfg.hash()), config_(cfg.to_json())
    {
        fs::create_directories(root_);
        config_["paths"].erase("output_dir");
        config_.erase("threads");
    }

    const fs::path& root() const { return root_; }
    const std::string& hash() const { return hash_; }

    void write(const fs::path& rel, std::string_view content)
    {
        const fs::path full = root_ / rel;
        if (full.has_parent_path())
            fs::create_directories(full.parent_path());
        io::write_text(full, content);
        files_.insert(rel.generic_string());
    }

    // For files produced by a library writer directly under root().
    void record(const fs::path& rel) { files_.insert(rel.generic_string()); }

    void write_json(const fs::path& rel, json j)
    {
        j["config_hash"] = hash_;
        write(rel, j.dump(2) + "\n");
    }

    void finish()
    {
        json cfg = {{"command", command_}, {"config_hash", hash_}, {"config", config_}};
        io::write_text(root_ / "config.json", cfg.dump(2) + "\n");
        json prov = {{"command", command_}, {"config_hash", hash_}, {"files", std::vector<std::string>(files_.begin(), files_.end())}};
        io::write_text(root_ / "provenance.json", prov.dump(2) + "\n");

        const auto now = std::chrono::system_clock::now();
        const std::time_t t = std::chrono::system_clock::to_time_t(now);
        char buf[32];
        std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
        json meta = {{"command", command_}, {"config_hash", hash_}, {"finished_at", buf}};
        io::write_text(root_ / "run_metadata.json", meta.dump(2) + "\n");
    }

private:
    fs::path root_;
    std::string command_;
    std::string hash_;
    json config_;
    std::set<std::string> files_;
};

void require(const fs::path& p, const char* what)
{
    if (p.empty())
        throw ConfigError(std::string("missing required path: ") + what);
}

std::vector<EncoderPredictionSet> load_predictions(const RunConfig& cfg, std::ostream& log)
{
    require(cfg.predictions_dir, "predictions_dir");
    std::vector<std::string> warnings;
    auto preds = io::read_prediction_dir(cfg.predictions_dir, &warnings);
    for (const auto& w : warnings)
        log << "warning: " << w << "\n";
    if (preds.empty())
        throw ValidationError("no encoder prediction files in " + cfg.predictions_dir.string());

    // Encoders must cover the same videos; a disjoint pair means the files come
    // from different datasets.
    for (std::size_t i = 1; i < preds.size(); ++i) {
        bool shared = false;
        for (const auto& [vid, rows] : preds[i].rows)
            if (preds[0].contains(vid)) {
                shared = true;
                break;
            }
        if (!shared)
            throw ValidationError("encoders '" + preds[0].encoder_name + "' and '" + preds[i].encoder_name +
                                  "' have disjoint video sets");
    }
    return preds;
}

Manifest load_labels(const RunConfig& cfg)
{
    require(cfg.labels, "labels");
    return io::read_labels(cfg.labels);
}

FoldAssignment load_folds(const RunConfig& cfg)
{
    require(cfg.folds, "folds");
    return read_folds(cfg.folds);
}

std::string soft_label_header()
{
    std::string h = "video_id,actor_id";
    for (auto name : kEmotionNames)
        h += ",y_" + std::string(name);
    return h;
}

struct AggregatedSet {
    std::vector<std::string> video_ids;
    std::vector<std::string> actors;
    Eigen::MatrixXd X; // one row per video
};

AggregatedSet aggregate_dir(const RunConfig& cfg, const std::set<std::string>* only, std::ostream& log)
{
    require(cfg.features_dir, "features_dir");
    const auto entries = read_feature_manifest(cfg.features_dir);
    AggregatedSet out;
    std::vector<Eigen::VectorXd> rows;
    for (const auto& e : entries) {
        if (only && !only->count(e.video_id))
            continue;
        const auto seq = read_feature_file(e.path, e.video_id);
        const Eigen::MatrixXd frames = average_layers(seq, cfg.aggregation.layer_lo, cfg.aggregation.layer_hi);
        rows.push_back(aggregate_temporal(frames, cfg.aggregation));
        if (rows.back().size() != rows.front().size())
            throw ValidationError("feature file " + e.path.string() + " has a different dimensionality");
        out.video_ids.push_back(e.video_id);
        out.actors.push_back(e.actor_id);
    }
    if (rows.empty())
        throw ValidationError("no feature files selected from " + cfg.features_dir.string());
    out.X.resize(static_cast<Eigen::Index>(rows.size()), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        out.X.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    log << "aggregated " << rows.size() << " videos to " << out.X.cols() << " dims\n";
    return out;
}

} // namespace

void cmd_split(const RunConfig& cfg, std::ostream& log)
{
    const Manifest m = load_labels(cfg);
    const FoldAssignment folds = split_actors(m, cfg.k, cfg.seed);
    OutputDir out(cfg, "split");
    out.write("folds.csv", format_folds(folds));
    out.finish();
    log << "split " << folds.fold_of_actor().size() << " actors into " << folds.k() << " folds\n";
}

void cmd_encode_labels(const RunConfig& cfg, std::ostream& log)
{
    const Manifest m = load_labels(cfg);
    std::string text = soft_label_header() + "\n";
    std::size_t n = 0;
    for (const auto& r : m.records()) {
        if (!r.annotation)
            continue;
        const SoftLabel y = encode_soft_label(*r.annotation);
        text += r.video_id + "," + r.actor_id;
        for (int i = 0; i < kNumEmotions; ++i)
            text += "," + io::format_double(y(i));
        text += "\n";
        ++n;
    }
    OutputDir out(cfg, "encode-labels");
    out.write("soft_labels.csv", text);
    out.finish();
    log << "encoded " << n << " labels\n";
}

void cmd_aggregate(const RunConfig& cfg, std::ostream& log)
{
    cfg.aggregation.validate();
    const AggregatedSet agg = aggregate_dir(cfg, nullptr, log);
    std::string text = "video_id,actor_id";
    for (Eigen::Index d = 0; d < agg.X.cols(); ++d)
        text += ",f" + std::to_string(d);
    text += "\n";
    for (Eigen::Index i = 0; i < agg.X.rows(); ++i) {
        text += agg.video_ids[static_cast<std::size_t>(i)] + "," + agg.actors[static_cast<std::size_t>(i)];
        for (Eigen::Index d = 0; d < agg.X.cols(); ++d)
            text += "," + io::format_double(agg.X(i, d));
        text += "\n";
    }
    OutputDir out(cfg, "aggregate");
    out.write("vectors.csv", text);
    out.finish();
}

void cmd_train_mlp(const RunConfig& cfg, std::ostream& log)
{
    cfg.aggregation.validate();
    MlpConfig mcfg = cfg.mlp;
    mcfg.validate();
    const Manifest labels = load_labels(cfg);
    const FoldAssignment folds = load_folds(cfg);

    require(cfg.features_dir, "features_dir");
    std::set<std::string> have;
    for (const auto& e : read_feature_manifest(cfg.features_dir))
        have.insert(e.video_id);
    std::vector<std::string> missing;
    std::set<std::string> wanted;
    for (const auto& r : labels.records()) {
        if (!r.annotation)
            continue;
        wanted.insert(r.video_id);
        if (!have.count(r.video_id))
            missing.push_back(r.video_id);
    }
    if (!missing.empty()) {
        std::string msg = std::to_string(missing.size()) + " labeled videos have no features:";
        for (const auto& v : missing)
            msg += " " + v;
        throw ValidationError(msg);
    }

    // Unlabeled videos are aggregated too so that they receive predictions.
    const AggregatedSet agg = aggregate_dir(cfg, nullptr, log);
    std::vector<int> fold_of(agg.video_ids.size(), -1);
    std::vector<std::optional<SoftLabel>> y(agg.video_ids.size());
    for (std::size_t i = 0; i < agg.video_ids.size(); ++i) {
        const SampleRecord* r = labels.find(agg.video_ids[i]);
        const std::string& actor = r ? r->actor_id : agg.actors[i];
        if (folds.contains(actor))
            fold_of[i] = folds.fold_of(actor);
        if (r && r->annotation) {
            if (fold_of[i] < 0)
                throw ValidationError("actor '" + actor + "' has no fold");
            y[i] = encode_soft_label(*r->annotation);
        }
    }

    auto gather = [&](auto pick) {
        std::vector<Eigen::Index> idx;
        for (std::size_t i = 0; i < agg.video_ids.size(); ++i)
            if (pick(i))
                idx.push_back(static_cast<Eigen::Index>(i));
        return idx;
    };
    auto rows_of = [&](const std::vector<Eigen::Index>& idx) {
        Eigen::MatrixXd X(static_cast<Eigen::Index>(idx.size()), agg.X.cols());
        Eigen::MatrixXd Y(static_cast<Eigen::Index>(idx.size()), kNumEmotions);
        for (std::size_t r = 0; r < idx.size(); ++r) {
            const auto i = static_cast<std::size_t>(idx[r]);
            X.row(static_cast<Eigen::Index>(r)) = agg.X.row(idx[r]);
            if (y[i])
                Y.row(static_cast<Eigen::Index>(r)) = y[i]->transpose();
            else
                Y.row(static_cast<Eigen::Index>(r)).setConstant(1.0 / kNumEmotions);
        }
        return std::pair{X, Y};
    };

    OutputDir out(cfg, "train-mlp");
    EncoderPredictionSet all;
    all.encoder_name = cfg.encoder_name;
    for (int f = 0; f < folds.k(); ++f) {
        const auto train_idx = gather([&](std::size_t i) { return y[i] && fold_of[i] != f; });
        const auto val_idx = gather([&](std::size_t i) { return y[i] && fold_of[i] == f; });
        const auto held_idx = gather([&](std::size_t i) { return fold_of[i] == f; });
        if (val_idx.empty())
            throw ValidationError("fold " + std::to_string(f) + " has no labeled videos");
        if (train_idx.size() < 2)
            throw ValidationError("fold " + std::to_string(f) + ": fewer than 2 training videos");

        const auto [Xt, Yt] = rows_of(train_idx);
        const auto [Xv, Yv] = rows_of(val_idx);
        mcfg.seed = mix_seed(cfg.seed + static_cast<std::uint64_t>(f));
        const TrainResult tr = train_mlp(Xt, Yt, Xv, Yv, mcfg);
        log << "fold " << f << ": best epoch " << tr.best_epoch << ", val KL " << io::format_fixed(tr.best_val_loss, 4)
            << "\n";

        const auto [Xh, Yh] = rows_of(held_idx);
        const Eigen::MatrixXd P = tr.model.predict(Xh);
        EncoderPredictionSet fold_set;
        fold_set.encoder_name = cfg.encoder_name;
        for (std::size_t r = 0; r < held_idx.size(); ++r) {
            const auto i = static_cast<std::size_t>(held_idx[r]);
            Distribution p = P.row(static_cast<Eigen::Index>(r)).transpose();
            const std::string& vid = agg.video_ids[i];
            fold_set.rows[vid].push_back(p);
            fold_set.actor_of[vid] = agg.actors[i];
            all.rows[vid].push_back(p);
            all.actor_of[vid] = agg.actors[i];
        }
        const fs::path dir = "fold_" + std::to_string(f);
        out.write(dir / "model.ckpt", tr.model.serialize());
        out.write(dir / "train_log.csv", format_training_log(tr.log));
        out.write(dir / "predictions.csv", io::format_predictions(fold_set));
    }
    out.write(fs::path("predictions") / (cfg.encoder_name + ".csv"), io::format_predictions(all));
    out.finish();
}

void cmd_fuse_evaluate(const RunConfig& cfg, std::ostream& log)
{
    const PipelineConfig pipe = cfg.pipeline();
    const auto preds = load_predictions(cfg, log);
    const Manifest labels = load_labels(cfg);
    const FoldAssignment folds = load_folds(cfg);

    const FusionProblem problem(preds, labels, folds);
    const FittedPipeline fit = fit_pipeline(problem, pipe);
    log << "weights searched with thresholds " << io::format_fixed(fit.search_thresholds.alpha, 2) << "/"
        << io::format_fixed(fit.search_thresholds.beta, 2) << ", objective "
        << io::format_fixed(fit.weights.objective, 4) << "\n";

    const CrossValidationResult cv = cross_validate(preds, labels, folds, pipe);
    log << "cv score " << io::format_fixed(cv.score.mean, 4) << " (acc_p " << io::format_fixed(cv.acc_p.mean, 4)
        << ", acc_s " << io::format_fixed(cv.acc_s.mean, 4) << ")\n";

    OutputDir out(cfg, "fuse-evaluate");
    out.write("weights.csv", format_weights(fit.weights.weights));
    out.write("search_log.csv", format_search_log(fit.weights));
    json th = threshold_report(fit.surfaces, pipe.threshold_strategy, fit.thresholds);
    th["search_thresholds"] = {{"alpha", fit.search_thresholds.alpha}, {"beta", fit.search_thresholds.beta}};
    out.write_json("thresholds.json", th);
    out.write("results.csv", format_results(cv));
    out.write_json("results.json", results_json(cv));

    // Fused probabilities of every labeled video under the fitted weights.
    EncoderPredictionSet fused;
    fused.encoder_name = "fused";
    for (const auto& r : labels.records()) {
        bool all = true;
        for (const auto& p : preds)
            all = all && p.contains(r.video_id);
        if (!all)
            continue;
        fused.rows[r.video_id].push_back(fuse(preds, fit.weights.weights, r.video_id));
        fused.actor_of[r.video_id] = r.actor_id;
    }
    out.write("fused_predictions.csv", io::format_predictions(fused));

    out.write("surface.svg", surface_svg(mean_surface(fit.surfaces), "mean score over folds"));
    out.write("beta_folds.svg", beta_bars_svg(fit.surfaces, "per-fold optimal beta"));
    out.finish();
}

void cmd_sensitivity(const RunConfig& cfg, std::ostream& log)
{
    const PipelineConfig pipe = cfg.pipeline();
    const auto preds = load_predictions(cfg, log);
    const Manifest labels = load_labels(cfg);
    const FoldAssignment folds = load_folds(cfg);
    const FusionProblem problem(preds, labels, folds);

    const WeightVector w = cfg.weights.empty() ? WeightVector::uniform(problem.encoders()) : read_weights(cfg.weights);
    const auto surfaces = problem.fold_surfaces(problem.to_vector(w), pipe.postprocess({}),
                                                pipe.weight_search.alpha_grid, pipe.weight_search.beta_grid,
                                                pipe.threads);

    json rep = threshold_report(surfaces, pipe.threshold_strategy, select_thresholds(surfaces, pipe.threshold_strategy));
    json strategies;
    for (auto s : {ThresholdStrategy::per_fold_average, ThresholdStrategy::decoupled, ThresholdStrategy::best_fold}) {
        const ThresholdPair t = select_thresholds(surfaces, s);
        strategies[std::string(strategy_name(s))] = {{"alpha", t.alpha}, {"beta", t.beta}};
    }
    rep["strategies"] = strategies;
    json wj;
    for (const auto& [name, v] : w.weights())
        wj[name] = v;
    rep["weights"] = wj;

    std::string csv = "fold,alpha,beta,acc_p,acc_s,score\n";
    for (std::size_t f = 0; f < surfaces.size(); ++f) {
        const auto& s = surfaces[f];
        for (Eigen::Index i = 0; i < s.score.rows(); ++i)
            for (Eigen::Index j = 0; j < s.score.cols(); ++j)
                csv += std::to_string(f) + "," + io::format_double(s.alpha_grid[static_cast<std::size_t>(i)]) + "," +
                       io::format_double(s.beta_grid[static_cast<std::size_t>(j)]) + "," +
                       io::format_double(s.acc_p(i, j)) + "," + io::format_double(s.acc_s(i, j)) + "," +
                       io::format_double(s.score(i, j)) + "\n";
    }

    const BetaSpread b = beta_spread(surfaces);
    log << "per-fold beta in [" << io::format_fixed(b.min, 2) << ", " << io::format_fixed(b.max, 2) << "]";
    if (b.ratio)
        log << ", ratio " << io::format_fixed(*b.ratio, 2);
    log << "\n";

    OutputDir out(cfg, "sensitivity");
    out.write_json("sensitivity.json", rep);
    out.write("surfaces.csv", csv);
    out.write("surface.svg", surface_svg(mean_surface(surfaces), "mean score over folds"));
    out.write("beta_folds.svg", beta_bars_svg(surfaces, "per-fold optimal beta"));
    out.finish();
}

void cmd_synth(const RunConfig& cfg, std::ostream& log)
{
    SynthConfig sc = cfg.synth;
    sc.seed = cfg.seed;
    const SynthData data = generate(sc);
    const FoldAssignment folds = folds_by_gap(data, cfg.synth_folds);

    OutputDir out(cfg, "synth");
    out.write("labels.csv", io::format_labels(data.manifest));
    out.write(fs::path("predictions") / "synth.csv", io::format_predictions(data.predictions));
    out.write("folds.csv", format_folds(folds));
    std::string gaps = "actor_id,gap\n";
    for (const auto& [actor, g] : data.actor_gap)
        gaps += actor + "," + io::format_double(g) + "\n";
    out.write("actor_gaps.csv", gaps);

    if (cfg.synth_features) {
        const int layers = std::max(1, cfg.aggregation.layer_hi + 1);
        const auto seqs = synth_features(data, layers, cfg.synth_feature_frames, cfg.synth_feature_dims, 1.0,
                                         cfg.synth_feature_noise, mix_seed(cfg.seed + 1));
        std::vector<FeatureManifestEntry> entries;
        fs::create_directories(out.root() / "features");
        for (const auto& s : seqs) {
            const fs::path rel = fs::path("features") / (s.video_id + ".feat");
            write_feature_file(out.root() / rel, s);
            out.record(rel);
            entries.push_back({s.video_id, data.manifest.find(s.video_id)->actor_id, s.video_id + ".feat"});
        }
        write_feature_manifest(out.root() / "features", entries);
        out.record(fs::path("features") / "manifest.csv");
        log << "wrote " << seqs.size() << " feature files\n";
    }
    out.finish();
    log << "generated " << data.manifest.size() << " clips from " << data.actor_gap.size() << " actors\n";
}

bool cmd_verify_identities(const RunConfig& cfg, std::ostream& log)
{
    if (!cfg.published && cfg.results.empty())
        throw ConfigError("verify-identities needs --published and/or --results");
    std::string csv = "source,name,acc_p,acc_s,score,expected,ok\n";
    std::size_t failures = 0, checked = 0;
    auto check = [&](const std::string& source, const std::string& name, double p, double s, double score) {
        const bool ok = score_identity_holds(p, s, score, cfg.identity_tolerance);
        ++checked;
        if (!ok) {
            ++failures;
            log << "FAIL " << source << " / " << name << ": 0.5*(" << io::format_double(p) << "+"
                << io::format_double(s) << ") = " << io::format_double(combined_score(p, s)) << " vs "
                << io::format_double(score) << "\n";
        }
        csv += source + "," + name + "," + io::format_double(p) + "," + io::format_double(s) + "," +
               io::format_double(score) + "," + io::format_double(combined_score(p, s)) + "," + (ok ? "1" : "0") + "\n";
    };

    if (cfg.published) {
        for (const auto& t : published_score_triples())
            check(t.group, t.name, t.acc_p, t.acc_s, t.score);
        for (const auto& [column, weights] : published_weight_columns()) {
            double sum = 0.0;
            for (const auto& [name, w] : weights)
                sum += w;
            const bool ok = is_simplex(weights, 5e-3);
            ++checked;
            if (!ok) {
                ++failures;
                log << "FAIL weights " << column << ": sum " << io::format_double(sum) << "\n";
            }
            csv += "weights," + column + ",,,," + io::format_double(sum) + "," + (ok ? "1" : "0") + "\n";
        }
    }

    if (!cfg.results.empty()) {
        io::CsvReader reader(cfg.results, "fold,acc_p,acc_s,score,n");
        std::vector<std::string> f;
        while (reader.next(f)) {
            if (f[0] == "summary_std") // std of a mean is not a score
                continue;
            check("results", f[0], io::parse_double(f[1]), io::parse_double(f[2]), io::parse_double(f[3]));
        }
    }

    OutputDir out(cfg, "verify-identities");
    out.write("identities.csv", csv);
    out.finish();
    log << checked - failures << "/" << checked << " identities hold\n";
    return failures == 0;
}

namespace {

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::optional<std::string> out;
    std::optional<std::string> labels, folds, predictions, features, weights, results;
    std::optional<int> k;
    std::optional<std::string> threshold_strategy, fusion_strategy;
    bool published = false;

    RunConfig resolve() const
    {
        RunConfig c = config.empty() ? RunConfig{} : RunConfig::load(config);
        if (seed) c.seed = *seed;
        if (threads) c.threads = *threads;
        if (out) c.output_dir = *out;
        if (labels) c.labels = *labels;
        if (folds) c.folds = *folds;
        if (predictions) c.predictions_dir = *predictions;
        if (features) c.features_dir = *features;
        if (weights) c.weights = *weights;
        if (results) c.results = *results;
        if (k) c.k = *k;
        if (threshold_strategy) c.threshold_strategy = parse_threshold_strategy(*threshold_strategy);
        if (fusion_strategy) c.fusion_strategy = parse_fusion_strategy(*fusion_strategy);
        if (published) c.published = true;
        return c;
    }
};

void add_common(CLI::App* sub, Overrides& o)
{
    sub->add_option("--config", o.config, "JSON run configuration");
    sub->add_option("--seed", o.seed, "random seed");
    sub->add_option("--threads", o.threads, "worker threads for grid searches");
    sub->add_option("--out", o.out, "output directory");
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"blended-emotion post-encoder pipeline", "blendfuse"};
    app.require_subcommand(1);
    Overrides o;

    auto* split = app.add_subcommand("split", "actor-disjoint fold assignment");
    auto* encode = app.add_subcommand("encode-labels", "soft-label targets from annotations");
    auto* aggregate = app.add_subcommand("aggregate", "layer-averaged temporal statistics");
    auto* train = app.add_subcommand("train-mlp", "per-fold MLP heads and held-out predictions");
    auto* fuse_eval = app.add_subcommand("fuse-evaluate", "weight search, thresholds and cross-validation");
    auto* sens = app.add_subcommand("sensitivity", "per-fold threshold surfaces");
    auto* synth = app.add_subcommand("synth", "synthetic actor population");
    auto* verify = app.add_subcommand("verify-identities", "score = 0.5 (acc_p + acc_s) checks");

    for (auto* s : {split, encode, aggregate, train, fuse_eval, sens, synth, verify})
        add_common(s, o);
    for (auto* s : {split, encode, train, fuse_eval, sens})
        s->add_option("--labels", o.labels, "labels file");
    for (auto* s : {train, fuse_eval, sens})
        s->add_option("--folds", o.folds, "folds file");
    for (auto* s : {fuse_eval, sens})
        s->add_option("--predictions", o.predictions, "directory of encoder prediction files");
    for (auto* s : {fuse_eval, sens})
        s->add_option("--threshold-strategy", o.threshold_strategy, "per_fold_average | decoupled | best_fold");
    fuse_eval->add_option("--fusion-strategy", o.fusion_strategy, "coordinate-ascent | exhaustive");
    for (auto* s : {aggregate, train})
        s->add_option("--features", o.features, "feature directory with manifest.csv");
    split->add_option("--k", o.k, "number of folds");
    sens->add_option("--weights", o.weights, "fusion weights file (default uniform)");
    verify->add_option("--results", o.results, "results file to check");
    verify->add_flag("--published", o.published, "check the built-in published tables");

    std::vector<const char*> argv{"blendfuse"};
    for (const auto& a : args)
        argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ExitCode::ok : ExitCode::config_failure;
    }

    try {
        const RunConfig cfg = o.resolve();
        cfg.check_paths();
        if (split->parsed())
            cmd_split(cfg, err);
        else if (encode->parsed())
            cmd_encode_labels(cfg, err);
        else if (aggregate->parsed())
            cmd_aggregate(cfg, err);
        else if (train->parsed())
            cmd_train_mlp(cfg, err);
        else if (fuse_eval->parsed())
            cmd_fuse_evaluate(cfg, err);
        else if (sens->parsed())
            cmd_sensitivity(cfg, err);
        else if (synth->parsed())
            cmd_synth(cfg, err);
        else if (verify->parsed() && !cmd_verify_identities(cfg, err))
            return ExitCode::validation_failure;
        return ExitCode::ok;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return ExitCode::config_failure;
    } catch (const ValidationError& e) {
        err << "invalid input: " << e.what() << "\n";
        return ExitCode::validation_failure;
    } catch (const NumericError& e) {
        err << "numeric failure: " << e.what() << "\n";
        return ExitCode::numeric_failure;
    } catch (const fs::filesystem_error& e) {
        err << "invalid input: " << e.what() << "\n";
        return ExitCode::validation_failure;
    } catch (const std::exception& e) {
        err << "internal failure: " << e.what() << "\n";
        return ExitCode::numeric_failure;
    }
}

int run_cli(const std::vector<std::string>& args) { return run_cli(args, std::cout, std::cerr); }

} // namespace blendfuse::cli
