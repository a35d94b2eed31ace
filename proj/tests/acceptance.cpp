// Runs every acceptance criterion and prints one PASS/FAIL line each.
// Exit status is non-zero when any criterion fails.

#include "fixtures.hpp"
#include "reference_discretize.hpp"
#include "test_util.hpp"

#include "blendfuse/crossval.hpp"
#include "blendfuse/features.hpp"
#include "blendfuse/io.hpp"
#include "blendfuse/labels.hpp"
#include "blendfuse/mlp.hpp"
#include "blendfuse/synth.hpp"
#include "commands.hpp"
#include "published.hpp"
#include "report.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <sstream>

using namespace blendfuse;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(double x, int digits = 4) { return io::format_fixed(x, digits); }

// ---------------------------------------------------------------------------

Outcome score_identities()
{
    int ok = 0, total = 0;
    std::string failed;
    for (const auto& t : cli::published_score_triples()) {
        ++total;
        if (cli::score_identity_holds(t.acc_p, t.acc_s, t.score, 5e-4))
            ++ok;
        else
            failed += " [" + t.name + ": 0.5*(" + io::format_double(t.acc_p) + "+" + io::format_double(t.acc_s) +
                      ")=" + io::format_double(combined_score(t.acc_p, t.acc_s)) + " vs " +
                      io::format_double(t.score) + "]";
    }
    return {ok == total, std::to_string(ok) + "/" + std::to_string(total) + " triples hold" +
                             (failed.empty() ? "" : "; failing:" + failed)};
}

Outcome weight_simplex()
{
    bool all = true;
    std::string d;
    for (const auto& [name, col] : cli::published_weight_columns()) {
        double sum = 0.0;
        for (const auto& [e, w] : col)
            sum += w;
        const bool ok = is_simplex(col, 5e-3);
        all = all && ok;
        d += name + " sum " + fmt(sum, 3) + (ok ? " ok; " : " FAILS; ");
    }
    return {all, d};
}

Distribution awkward_distribution(std::mt19937_64& rng)
{
    switch (rng() % 4) {
    case 0:
        return testutil::random_distribution(rng);
    case 1: { // coarse quantization produces ties
        Distribution p;
        for (int i = 0; i < 6; ++i)
            p(i) = static_cast<double>(rng() % 5);
        if (p.sum() == 0.0)
            p(static_cast<int>(rng() % 6)) = 1.0;
        return p / p.sum();
    }
    case 2: { // sparse
        Distribution p = Distribution::Zero();
        const int k = 1 + static_cast<int>(rng() % 3);
        for (int j = 0; j < k; ++j)
            p(static_cast<int>(rng() % 6)) += unit_uniform(rng);
        return p / p.sum();
    }
    default: { // near-ties around a blend
        Distribution p = Distribution::Constant(0.02);
        const int a = static_cast<int>(rng() % 6);
        const int b = (a + 1 + static_cast<int>(rng() % 5)) % 6;
        p(a) = 0.45 + 0.01 * static_cast<double>(rng() % 5);
        p(b) = 0.45;
        return p / p.sum();
    }
    }
}

Outcome discretization_oracle()
{
    std::mt19937_64 rng(2024);
    const auto grid = default_threshold_grid();
    int mismatches = 0;
    for (int t = 0; t < 10000; ++t) {
        const Distribution p = awkward_distribution(rng);
        PostprocessConfig cfg;
        const bool on_grid = rng() & 1U;
        cfg.thresholds.alpha = on_grid ? grid[rng() % grid.size()] : unit_uniform(rng) * 0.6;
        cfg.thresholds.beta = on_grid ? grid[rng() % grid.size()] : unit_uniform(rng) * 0.6;
        if (rng() % 3 == 0)
            cfg.neutral_index = static_cast<int>(rng() % 6);
        cfg.renormalize_survivors = rng() % 4 == 0;
        std::array<double, 6> a;
        for (int i = 0; i < 6; ++i)
            a[static_cast<std::size_t>(i)] = p(i);
        const auto want = reference::discretize(a, cfg.thresholds.alpha, cfg.thresholds.beta, cfg.neutral_index,
                                                cfg.renormalize_survivors);
        if (!(reference::from_blend(discretize(p, cfg)) == want))
            ++mismatches;
    }
    return {mismatches == 0, std::to_string(mismatches) + " mismatches in 10000 tuples"};
}

Outcome surface_consistency()
{
    SynthConfig sc;
    sc.n_actors = 10;
    sc.clips_per_actor = 50;
    sc.seed = 4;
    const SynthData data = generate(sc);
    std::vector<Distribution> probs;
    std::vector<Blend> labels;
    for (const auto& r : data.manifest.records()) {
        probs.push_back(data.predictions.averaged(r.video_id));
        labels.push_back(*r.annotation);
    }
    const auto grid = default_threshold_grid();
    const ThresholdSurface s = search_thresholds(probs, labels, grid, grid);
    std::mt19937_64 rng(5);
    int matched = 0;
    for (int c = 0; c < 10; ++c) {
        const auto i = static_cast<Eigen::Index>(rng() % grid.size());
        const auto j = static_cast<Eigen::Index>(rng() % grid.size());
        PostprocessConfig post;
        post.thresholds = {grid[static_cast<std::size_t>(i)], grid[static_cast<std::size_t>(j)]};
        std::vector<Blend> preds;
        for (const auto& p : probs)
            preds.push_back(discretize(p, post));
        const EvalResult e = evaluate(preds, labels);
        if (e == s.at(i, j) && s.score(i, j) == e.score)
            ++matched;
    }
    return {matched == 10, std::to_string(matched) + "/10 cells match on " + std::to_string(probs.size()) + " clips"};
}

struct SpreadRun {
    BetaSpread beta;
    double alpha_min, alpha_max;
    std::string betas;
};

SpreadRun spread_run(double gap_lo, double gap_hi)
{
    SynthConfig sc;
    sc.n_actors = 43;
    sc.clips_per_actor = 1000;
    sc.gap_lo = gap_lo;
    sc.gap_hi = gap_hi;
    sc.noise_sigma = 0.12;
    sc.seed = 1;
    const SynthData data = generate(sc);
    const FoldAssignment folds = folds_by_gap(data, 5);
    const FusionProblem problem({data.predictions}, data.manifest, folds);
    const auto grid = default_threshold_grid();
    const auto surfaces = problem.fold_surfaces(Eigen::VectorXd::Ones(1), PostprocessConfig{}, grid, grid);
    SpreadRun r{beta_spread(surfaces), 1.0, 0.0, ""};
    for (const auto& s : surfaces) {
        r.alpha_min = std::min(r.alpha_min, s.best.alpha);
        r.alpha_max = std::max(r.alpha_max, s.best.alpha);
        r.betas += (r.betas.empty() ? "" : ",") + fmt(s.best.beta, 2);
    }
    return r;
}

Outcome beta_instability()
{
    const SpreadRun het = spread_run(0.05, 0.45);
    const SpreadRun deg = spread_run(0.25, 0.25);
    const double ratio = het.beta.ratio.value_or(0.0);
    const bool het_ok = het.beta.ratio && ratio >= 3.0;
    const bool deg_ok = deg.beta.max - deg.beta.min <= 0.01 + 1e-9;
    const bool alpha_ok = het.alpha_max - het.alpha_min <= 0.05 + 1e-9 && deg.alpha_max - deg.alpha_min <= 0.05 + 1e-9;
    return {het_ok && deg_ok && alpha_ok,
            "heterogeneous beta [" + het.betas + "] ratio " + (het.beta.ratio ? fmt(ratio, 2) : "undefined") +
                "; degenerate beta [" + deg.betas + "]; alpha spread " + fmt(het.alpha_max - het.alpha_min, 2) +
                " / " + fmt(deg.alpha_max - deg.alpha_min, 2)};
}

Eigen::MatrixXd random_soft_labels(Eigen::Index n, std::mt19937_64& rng)
{
    Eigen::MatrixXd Y(n, kNumEmotions);
    for (Eigen::Index i = 0; i < n; ++i)
        Y.row(i) = encode_soft_label(fixtures::random_blend(rng)).transpose();
    return Y;
}

Outcome gradients()
{
    std::mt19937_64 rng(31);
    double kl_worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const Distribution y = t % 2 ? testutil::random_distribution(rng) : encode_soft_label(fixtures::random_blend(rng));
        Distribution z;
        for (int i = 0; i < 6; ++i)
            z(i) = 2.0 * standard_normal(rng);
        const Distribution g = kl_grad_logits(y, z);
        const double h = 1e-5;
        for (int i = 0; i < 6; ++i) {
            Distribution zp = z, zm = z;
            zp(i) += h;
            zm(i) -= h;
            const double num = (kl_loss(y, softmax(zp)) - kl_loss(y, softmax(zm))) / (2 * h);
            kl_worst = std::max(kl_worst, std::abs(num - g(i)) / std::max({std::abs(num), std::abs(g(i)), 1e-3}));
        }
    }

    double mlp_worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        MlpConfig cfg;
        cfg.hidden_dims = {2 + static_cast<int>(rng() % 4), 2 + static_cast<int>(rng() % 3)};
        cfg.dropout = 0.0;
        cfg.seed = rng();
        const Eigen::Index in = 2 + static_cast<Eigen::Index>(rng() % 5);
        const Eigen::Index n = 4 + static_cast<Eigen::Index>(rng() % 8);
        MlpModel model(in, cfg);
        for (auto& layer : model.params().hidden) {
            layer.gamma = Eigen::VectorXd::Random(layer.gamma.size()).array() + 1.5;
            layer.beta = Eigen::VectorXd::Random(layer.beta.size()) * 0.5;
        }
        const Eigen::MatrixXd X = Eigen::MatrixXd::Random(n, in);
        const Eigen::MatrixXd Y = random_soft_labels(n, rng);
        MlpParams grad = model.params().zeros_like();
        model.loss_and_gradient(X, Y, grad, nullptr, false);
        MlpParams scratch = grad;
        const double h = 1e-4;
        model.params().zip(grad, [&](auto& p, auto& g) {
            for (Eigen::Index i = 0; i < p.size(); ++i) {
                const double saved = p.data()[i];
                p.data()[i] = saved + h;
                const double up = model.loss_and_gradient(X, Y, scratch, nullptr, false);
                p.data()[i] = saved - h;
                const double down = model.loss_and_gradient(X, Y, scratch, nullptr, false);
                p.data()[i] = saved;
                const double num = (up - down) / (2 * h);
                const double ana = g.data()[i];
                mlp_worst = std::max(mlp_worst, std::abs(num - ana) / std::max({std::abs(num), std::abs(ana), 1e-6}));
            }
        });
    }
    char buf[128];
    std::snprintf(buf, sizeof(buf), "worst relative error: KL %.2e (100 cases), MLP %.2e (100 models)", kl_worst,
                  mlp_worst);
    return {kl_worst <= 1e-5 && mlp_worst <= 1e-4, buf};
}

Outcome overfit_and_early_stop()
{
    std::mt19937_64 rng(8);
    const Eigen::MatrixXd X = Eigen::MatrixXd::Random(50, 12);
    const Eigen::MatrixXd Y = random_soft_labels(50, rng);
    MlpConfig cfg;
    cfg.hidden_dims = {64, 32};
    cfg.dropout = 0.0;
    cfg.lr = 0.05;
    cfg.batch_size = 50;
    cfg.max_epochs = 500;
    cfg.patience = 500;
    const TrainResult fit = train_mlp(X, Y, X, Y, cfg);
    const double train_kl = fit.model.mean_loss(X, Y);

    // Early stopping on a held-out set: the returned model must be the logged
    // best-validation epoch.
    const Eigen::MatrixXd Xv = Eigen::MatrixXd::Random(25, 12);
    const Eigen::MatrixXd Yv = random_soft_labels(25, rng);
    MlpConfig es = cfg;
    es.hidden_dims = {16, 8};
    es.batch_size = 10;
    es.max_epochs = 300;
    es.patience = 15;
    const TrainResult r = train_mlp(X, Y, Xv, Yv, es);
    const auto best = std::min_element(r.log.begin(), r.log.end(),
                                       [](const EpochLog& a, const EpochLog& b) { return a.val_loss < b.val_loss; });
    const bool snapshot_ok = best->epoch == r.best_epoch && r.model.mean_loss(Xv, Yv) == best->val_loss &&
                             static_cast<int>(r.log.size()) == std::min(es.max_epochs, r.best_epoch + es.patience);
    return {train_kl < 0.01 && snapshot_ok,
            "train KL " + fmt(train_kl, 5) + " after " + std::to_string(fit.log.size()) +
                " epochs; early stop at epoch " + std::to_string(r.log.size()) + ", best logged epoch " +
                std::to_string(best->epoch) + (snapshot_ok ? " restored" : " NOT restored")};
}

Outcome fusion_oracle()
{
    bool all = true;
    std::string d;
    for (int M : {2, 3}) {
        std::mt19937_64 rng(70 + M);
        const Manifest m = fixtures::random_manifest(15, 20, rng);
        const FoldAssignment folds = split_actors(m, 5);

        // As stated: the other encoders emit exactly uniform rows. Search
        // thresholds come from the pipeline's own selection on uniform weights.
        std::vector<EncoderPredictionSet> preds = {fixtures::oracle_encoder(m, "oracle")};
        for (int e = 1; e < M; ++e)
            preds.push_back(fixtures::uniform_encoder(m, "uniform" + std::to_string(e)));
        const FusionProblem problem(preds, m, folds);
        PipelineConfig cfg;
        const FittedPipeline fit = fit_pipeline(problem, cfg);
        WeightSearchOptions ex;
        ex.strategy = FusionStrategy::exhaustive;
        const auto grid = optimize_weights(problem, cfg.postprocess(fit.search_thresholds), ex);
        const double w = fit.weights.weights["oracle"];
        const bool ok = w >= 0.9 && fit.weights.objective == grid.objective;
        all = all && ok;
        d += "M=" + std::to_string(M) + ": oracle weight " + fmt(w, 3) + ", objective " +
             fmt(fit.weights.objective) + " vs grid " + fmt(grid.objective) + (ok ? "; " : " (fails); ");

        // For contrast: label-independent random rows instead of constant ones.
        std::vector<EncoderPredictionSet> noisy = {preds[0]};
        for (int e = 1; e < M; ++e)
            noisy.push_back(fixtures::noise_encoder(m, "noise" + std::to_string(e), rng));
        const FusionProblem np(noisy, m, folds);
        PostprocessConfig post;
        post.thresholds = {0.03, 0.05};
        const auto ca = optimize_weights(np, post);
        const auto ng = optimize_weights(np, post, ex);
        d += "[random others: weight " + fmt(ca.weights["oracle"], 3) + ", objective " + fmt(ca.objective) +
             " vs grid " + fmt(ng.objective) + "] ";
    }
    return {all, d};
}

Outcome aggregation_dims()
{
    AggregationConfig cfg;
    const Eigen::VectorXd big = aggregate_temporal(Eigen::MatrixXd::Random(12, 1024), cfg);
    Eigen::MatrixXd frames(6, 2);
    frames << 0, 0, 2, 2, 4, 4, 6, 6, 8, 8, 10, 10;
    Eigen::VectorXd expected(14);
    expected << 1, 1, 1, 1, 5, 5, 1, 1, 9, 9, 1, 1, 5, 5;
    const Eigen::VectorXd small = aggregate_temporal(frames, cfg);
    const bool bitwise = small.size() == 14 && std::memcmp(small.data(), expected.data(), sizeof(double) * 14) == 0;
    return {big.size() == 7168 && bitwise,
            "D=1024 -> " + std::to_string(big.size()) + " dims; T=6 example " + (bitwise ? "bitwise equal" : "differs")};
}

// Files under `root`, relative, excluding the timestamped metadata.
std::map<std::string, std::string> data_files(const fs::path& root)
{
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file() && e.path().filename() != "run_metadata.json")
            out[fs::relative(e.path(), root).generic_string()] = io::read_text(e.path());
    return out;
}

Outcome cli_determinism()
{
    testutil::TempDir dir("acceptance_cli");
    io::write_text(dir / "run.json",
                   nlohmann::json{{"synth",
                                   {{"n_actors", 15},
                                    {"clips_per_actor", 12},
                                    {"features", {{"enabled", true}, {"dims", 12}, {"frames", 4}, {"noise", 0.05}}}}},
                                  {"aggregation", {{"layer_lo", 0}, {"layer_hi", 1}}},
                                  {"mlp", {{"hidden_dims", {16}}, {"max_epochs", 40}, {"patience", 10}}},
                                  {"encoder_name", "head"}}
                       .dump(2));
    const std::string cfg = (dir / "run.json").string();
    std::ostringstream sink;
    int differing = 0, commands = 0;
    std::string d;
    auto twice = [&](const std::string& name, std::vector<std::string> args) {
        std::map<std::string, std::string> first;
        for (int rep = 0; rep < 2; ++rep) {
            const fs::path out = dir / (name + "_" + std::to_string(rep));
            auto a = args;
            a.insert(a.end(), {"--config", cfg, "--seed", "3", "--out", out.string()});
            const int code = cli::run_cli(a, sink, sink);
            if (code != 0 && !(name == "verify" && code == 2))
                throw std::runtime_error(name + " exited with " + std::to_string(code));
            auto files = data_files(out);
            if (rep == 0)
                first = std::move(files);
            else if (files != first) {
                ++differing;
                d += " " + name;
            }
        }
        ++commands;
    };
    const fs::path syn = dir / "synth_0";
    twice("synth", {"synth"});
    twice("split", {"split", "--labels", (syn / "labels.csv").string()});
    twice("encode", {"encode-labels", "--labels", (syn / "labels.csv").string()});
    twice("aggregate", {"aggregate", "--features", (syn / "features").string()});
    const std::vector<std::string> lf = {"--labels", (syn / "labels.csv").string(), "--folds",
                                         (syn / "folds.csv").string()};
    auto with = [&](std::vector<std::string> head, std::vector<std::string> tail) {
        head.insert(head.end(), lf.begin(), lf.end());
        head.insert(head.end(), tail.begin(), tail.end());
        return head;
    };
    twice("train", with({"train-mlp"}, {"--features", (syn / "features").string()}));
    const std::string preds = (dir / "train_0" / "predictions").string();
    twice("fuse", with({"fuse-evaluate"}, {"--predictions", preds}));
    twice("sensitivity", with({"sensitivity"}, {"--predictions", preds}));
    twice("verify", {"verify-identities", "--published", "--results", (dir / "fuse_0" / "results.csv").string()});
    return {differing == 0, std::to_string(commands - differing) + "/" + std::to_string(commands) +
                                " commands byte-identical on rerun" + (d.empty() ? "" : "; differing:" + d)};
}

struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
};

} // namespace

int main()
{
    const std::vector<Criterion> criteria = {
        {1, "score identities", 1, score_identities},
        {2, "weight simplex", 1, weight_simplex},
        {3, "discretization oracle", 10, discretization_oracle},
        {4, "threshold surface consistency", 30, surface_consistency},
        {5, "beta instability", 120, beta_instability},
        {6, "gradients", 60, gradients},
        {7, "overfit and early stopping", 60, overfit_and_early_stop},
        {8, "fusion oracle recovery", 120, fusion_oracle},
        {9, "aggregation dimensionality", 1, aggregation_dims},
        {10, "determinism", 120, cli_determinism},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs <= c.budget_s;
        const bool pass = o.pass && in_time;
        failures += pass ? 0 : 1;
        std::printf("%s %2d %-30s %7.2fs/%gs  %s%s\n", pass ? "PASS" : "FAIL", c.id, c.name, secs, c.budget_s,
                    o.detail.c_str(), in_time ? "" : " (over time budget)");
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria pass\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
