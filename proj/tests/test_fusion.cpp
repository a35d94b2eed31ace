#include "fixtures.hpp"
#include "test_util.hpp"

#include "blendfuse/fusion.hpp"
#include "blendfuse/io.hpp"
#include "blendfuse/postprocess.hpp"
#include "published.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace blendfuse;

namespace {

PostprocessConfig post_at(double alpha, double beta)
{
    PostprocessConfig p;
    p.thresholds = {alpha, beta};
    return p;
}

// Objective recomputed from `fuse` and `evaluate`, independent of FusionFold.
double direct_objective(const std::vector<EncoderPredictionSet>& preds, const Manifest& m, const FoldAssignment& folds,
                        const WeightVector& w, const PostprocessConfig& post)
{
    double total = 0.0;
    for (int f = 0; f < folds.k(); ++f) {
        std::vector<Blend> p, t;
        for (const auto& r : m.records()) {
            if (!r.annotation || folds.fold_of(r.actor_id) != f)
                continue;
            p.push_back(discretize(fuse(preds, w, r.video_id), post));
            t.push_back(*r.annotation);
        }
        total += evaluate(p, t).score;
    }
    return total / folds.k();
}

} // namespace

TEST_CASE("fuse")
{
    EncoderPredictionSet a, b;
    a.encoder_name = "a";
    b.encoder_name = "b";
    Distribution pa, pb;
    pa << 0.5, 0.1, 0.1, 0.1, 0.1, 0.1;
    pb << 0.0, 0.6, 0.1, 0.1, 0.1, 0.1;
    a.rows["v"] = {pa};
    b.rows["v"] = {pb, pb};
    a.actor_of["v"] = b.actor_of["v"] = "x";

    Distribution expect;
    expect << 0.125, 0.475, 0.1, 0.1, 0.1, 0.1;
    const WeightVector w({{"a", 0.25}, {"b", 0.75}});
    CHECK(fuse({a, b}, w, "v").isApprox(expect, 1e-15));
    CHECK(fuse({b, a}, w, "v") == fuse({a, b}, w, "v"));
    CHECK(fuse({a, b}, WeightVector({{"a", 1.0}, {"b", 0.0}}), "v") == pa);

    CHECK_THROWS_AS(fuse({a}, w, "v"), ValidationError);
    CHECK_THROWS_AS(fuse({a, b}, w, "missing"), ValidationError);

    SUBCASE("order invariance on random sets")
    {
        std::mt19937_64 rng(21);
        auto m = fixtures::random_manifest(4, 5, rng);
        std::vector<EncoderPredictionSet> sets;
        for (int e = 0; e < 4; ++e)
            sets.push_back(fixtures::noise_encoder(m, "e" + std::to_string(e), rng));
        const WeightVector wv({{"e0", 0.1}, {"e1", 0.2}, {"e2", 0.3}, {"e3", 0.4}});
        for (int trial = 0; trial < 10; ++trial) {
            auto shuffled = sets;
            std::shuffle(shuffled.begin(), shuffled.end(), rng);
            for (const auto& r : m.records()) {
                const Distribution f = fuse(shuffled, wv, r.video_id);
                CHECK(f == fuse(sets, wv, r.video_id));
                CHECK(is_distribution(f));
            }
        }
    }
}

TEST_CASE("weight vectors")
{
    CHECK_NOTHROW(WeightVector({{"a", 0.5}, {"b", 0.5}}));
    CHECK_THROWS_AS(WeightVector({{"a", 0.5}, {"b", 0.49}}), ValidationError);
    CHECK_THROWS_AS(WeightVector({{"a", 1.1}, {"b", -0.1}}), ValidationError);
    CHECK_THROWS_AS(WeightVector(std::map<std::string, double>{}), ValidationError);
    const auto u = WeightVector::uniform({"x", "y", "z"});
    CHECK(u["y"] == doctest::Approx(1.0 / 3));
    CHECK_THROWS_AS(u["w"], ValidationError);

    SUBCASE("file round trip within rounding tolerance")
    {
        testutil::TempDir dir("fusion_weights");
        io::write_text(dir / "w.csv", format_weights(u));
        const auto back = read_weights(dir / "w.csv");
        CHECK(back.size() == 3);
        CHECK(back["x"] == doctest::Approx(1.0 / 3).epsilon(1e-6));

        io::write_text(dir / "bad.csv", "encoder,weight\nx,0.6\ny,0.6\n");
        CHECK_THROWS_AS(read_weights(dir / "bad.csv"), ValidationError);
        io::write_text(dir / "dup.csv", "encoder,weight\nx,0.5\nx,0.5\n");
        CHECK_THROWS_AS(read_weights(dir / "dup.csv"), ValidationError);
    }
}

TEST_CASE("simplex_grid")
{
    CHECK(simplex_grid(1, 0.05).size() == 1);
    CHECK(simplex_grid(2, 0.05).size() == 21);
    CHECK(simplex_grid(3, 0.05).size() == 231);
    CHECK(simplex_grid(3, 0.1).size() == 66);
    for (const auto& w : simplex_grid(3, 0.05)) {
        CHECK(std::abs(w.sum() - 1.0) < 1e-12);
        CHECK(w.minCoeff() >= 0.0);
    }
    CHECK_THROWS_AS(simplex_grid(4, 0.05), ConfigError);
    CHECK_THROWS_AS(simplex_grid(2, 0.3), ConfigError);
}

TEST_CASE("single encoder keeps weight one")
{
    std::mt19937_64 rng(2);
    const auto m = fixtures::random_manifest(6, 8, rng);
    const auto folds = split_actors(m, 3);
    const std::vector<EncoderPredictionSet> preds = {fixtures::noisy_oracle(m, "only", 0.5, rng)};
    const FusionProblem problem(preds, m, folds);
    for (auto s : {FusionStrategy::coordinate_ascent, FusionStrategy::exhaustive}) {
        WeightSearchOptions opt;
        opt.strategy = s;
        const auto r = optimize_weights(problem, post_at(0.1, 0.1), opt);
        CHECK(r.weights["only"] == 1.0);
    }
}

TEST_CASE("exhaustive search over two encoders returns the best grid point")
{
    std::mt19937_64 rng(8);
    const auto m = fixtures::random_manifest(10, 12, rng);
    const auto folds = split_actors(m, 5);
    const std::vector<EncoderPredictionSet> preds = {fixtures::noisy_oracle(m, "p", 0.45, rng),
                                                     fixtures::noisy_oracle(m, "q", 0.35, rng)};
    const FusionProblem problem(preds, m, folds);
    const auto post = post_at(0.12, 0.08);

    WeightSearchOptions opt;
    opt.strategy = FusionStrategy::exhaustive;
    const auto r = optimize_weights(problem, post, opt);

    double best = direct_objective(preds, m, folds, WeightVector::uniform({"p", "q"}), post);
    for (int a = 0; a <= 20; ++a) {
        const WeightVector w({{"p", a / 20.0}, {"q", 1.0 - a / 20.0}});
        const double obj = direct_objective(preds, m, folds, w, post);
        CHECK(problem.objective(problem.to_vector(w), post) == doctest::Approx(obj).epsilon(1e-12));
        best = std::max(best, obj);
    }
    CHECK(r.objective == doctest::Approx(best).epsilon(1e-12));
    CHECK(direct_objective(preds, m, folds, r.weights, post) == doctest::Approx(r.objective).epsilon(1e-12));
    CHECK(r.log.size() == 22);
}

TEST_CASE("oracle encoder next to exactly uniform encoders")
{
    std::mt19937_64 rng(4);
    const auto m = fixtures::random_manifest(10, 10, rng);
    const auto folds = split_actors(m, 5);
    const std::vector<EncoderPredictionSet> preds = {fixtures::oracle_encoder(m, "oracle"),
                                                     fixtures::uniform_encoder(m, "u1"),
                                                     fixtures::uniform_encoder(m, "u2")};
    const FusionProblem problem(preds, m, folds);
    const FusionProblem alone({preds[0]}, m, folds);
    // At uniform weights a single clip keeps 1/9 on every other emotion, below
    // alpha; blends keep their order and a 70/30 gap of 0.4/3 > beta.
    const auto post = post_at(0.12, 0.05);
    const double oracle_score = alone.objective(Eigen::VectorXd::Ones(1), post);
    CHECK(oracle_score == 1.0);

    // A constant row keeps the ranking and only shrinks the gaps, so the
    // objective is flat over a wide band of oracle weights and the search
    // has no reason to leave the uniform start.
    for (auto s : {FusionStrategy::coordinate_ascent, FusionStrategy::exhaustive}) {
        WeightSearchOptions opt;
        opt.strategy = s;
        const auto r = optimize_weights(problem, post, opt);
        CHECK(r.objective == oracle_score);
        CHECK(direct_objective(preds, m, folds, r.weights, post) == oracle_score);
        CHECK(r.weights["oracle"] == doctest::Approx(1.0 / 3));
    }
}

TEST_CASE("oracle encoder next to uninformative encoders gets nearly all the weight")
{
    for (int M : {2, 3}) {
        CAPTURE(M);
        std::mt19937_64 rng(100 + M);
        const auto m = fixtures::random_manifest(15, 20, rng);
        const auto folds = split_actors(m, 5);
        std::vector<EncoderPredictionSet> preds = {fixtures::oracle_encoder(m, "oracle")};
        for (int e = 1; e < M; ++e)
            preds.push_back(fixtures::noise_encoder(m, "noise" + std::to_string(e), rng));
        const FusionProblem problem(preds, m, folds);
        const auto post = post_at(0.03, 0.05);

        const auto ca = optimize_weights(problem, post);
        WeightSearchOptions ex;
        ex.strategy = FusionStrategy::exhaustive;
        const auto grid = optimize_weights(problem, post, ex);

        CHECK(ca.weights["oracle"] >= 0.9);
        CHECK(ca.objective == grid.objective);
        CHECK(ca.objective == 1.0);
    }
}

TEST_CASE("search never ends below uniform and returns a simplex")
{
    std::mt19937_64 rng(33);
    const auto m = fixtures::random_manifest(12, 10, rng);
    const auto folds = split_actors(m, 4);
    std::vector<EncoderPredictionSet> preds;
    for (int e = 0; e < 3; ++e)
        preds.push_back(fixtures::noisy_oracle(m, "enc" + std::to_string(e), 0.2 + 0.15 * e, rng));
    const FusionProblem problem(preds, m, folds);
    const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(3, 1.0 / 3);

    for (double alpha : {0.05, 0.15})
        for (double beta : {0.02, 0.1}) {
            const auto post = post_at(alpha, beta);
            for (auto s : {FusionStrategy::coordinate_ascent, FusionStrategy::exhaustive}) {
                WeightSearchOptions opt;
                opt.strategy = s;
                const auto r = optimize_weights(problem, post, opt);
                CHECK(r.objective >= problem.objective(uniform, post));
                CHECK(is_simplex(r.weights.weights(), 1e-9));
                CHECK(problem.objective(problem.to_vector(r.weights), post) == r.objective);
            }
        }

    SUBCASE("search log")
    {
        const auto r = optimize_weights(problem, post_at(0.1, 0.05));
        REQUIRE(!r.log.empty());
        CHECK(r.log.front().step == 0);
        CHECK(r.log.front().weights.isApprox(uniform));
        for (std::size_t i = 0; i < r.log.size(); ++i) {
            CHECK(r.log[i].candidate_id == static_cast<int>(i));
            CHECK(std::abs(r.log[i].weights.sum() - 1.0) < 1e-9);
            if (i > 0)
                CHECK(r.log[i].step >= r.log[i - 1].step);
        }
        const double logged_best =
            std::max_element(r.log.begin(), r.log.end(), [](const auto& a, const auto& b) {
                return a.objective < b.objective;
            })->objective;
        CHECK(r.objective == logged_best);
        const std::string text = format_search_log(r);
        CHECK(text.rfind("step,candidate_id,objective\n", 0) == 0);
        CHECK(std::count(text.begin(), text.end(), '\n') == static_cast<long>(r.log.size() + 1));
    }

    SUBCASE("joint thresholds never lose to fixed ones")
    {
        const auto post = post_at(0.1, 0.05);
        WeightSearchOptions opt;
        opt.joint_thresholds = true;
        opt.alpha_grid = make_grid(0.0, 0.3, 0.05);
        opt.beta_grid = make_grid(0.0, 0.3, 0.05);
        const auto r = optimize_weights(problem, post, opt);
        CHECK(r.objective >= problem.objective(uniform, post));
        CHECK(r.objective == problem.joint_objective(problem.to_vector(r.weights), post, opt.alpha_grid,
                                                     opt.beta_grid));
    }
}

TEST_CASE("fusion problem validation")
{
    std::mt19937_64 rng(6);
    const auto m = fixtures::random_manifest(5, 4, rng);
    const auto folds = split_actors(m, 5);
    auto partial = fixtures::oracle_encoder(m, "partial");
    partial.rows.erase("act0_v0");
    CHECK_THROWS_AS(FusionProblem({fixtures::oracle_encoder(m, "a"), partial}, m, folds), ValidationError);
    CHECK_THROWS_AS(FusionProblem({fixtures::oracle_encoder(m, "a"), fixtures::oracle_encoder(m, "a")}, m, folds),
                    ValidationError);
    CHECK_THROWS_AS(FusionProblem({}, m, folds), ValidationError);
    CHECK_THROWS_AS(FusionProblem({fixtures::oracle_encoder(m, "a")}, m, FoldAssignment({{"act0", 0}}, 2)),
                    ValidationError);

    const FusionProblem sub({fixtures::oracle_encoder(m, "a")}, m, folds, {1, 3});
    CHECK(sub.folds().size() == 2);
    CHECK(sub.folds()[1].fold == 3);
}

TEST_CASE("published weight columns are simplices at the rounding tolerance")
{
    for (const auto& [name, col] : cli::published_weight_columns()) {
        CAPTURE(name);
        CHECK(is_simplex(col, 5e-3));
        CHECK_NOTHROW(WeightVector(col, 5e-3));
    }
    CHECK(cli::published_weight_columns().at("9-enc").size() == 9);
}
