#include "test_util.hpp"

#include "blendfuse/labels.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace blendfuse;

namespace {

Distribution vec(std::initializer_list<double> v)
{
    Distribution d;
    int i = 0;
    for (double x : v)
        d(i++) = x;
    return d;
}

} // namespace

TEST_CASE("encode_soft_label")
{
    CHECK(encode_soft_label(canonicalize_annotation(Emotion::anger, Emotion::fear, 70)) ==
          vec({0.7, 0, 0.3, 0, 0, 0}));
    CHECK(encode_soft_label(single(Emotion::happiness)) == vec({0, 0, 0, 1, 0, 0}));
    CHECK(encode_soft_label(canonicalize_annotation(Emotion::disgust, Emotion::surprise, 50)) ==
          vec({0, 0.5, 0, 0, 0, 0.5}));

    for (int a = 0; a < kNumEmotions; ++a)
        for (int b = 0; b < kNumEmotions; ++b)
            for (int sal : {30, 50, 70, 100}) {
                if ((a == b) != (sal == 100))
                    continue;
                const Blend x = canonicalize_annotation(emotion_from_index(a),
                                                        sal == 100 ? std::nullopt
                                                                   : std::optional<Emotion>(emotion_from_index(b)),
                                                        sal);
                const SoftLabel y = encode_soft_label(x);
                CHECK(is_soft_label(y));
                CHECK(y.sum() == 1.0);
            }
    CHECK_FALSE(is_soft_label(vec({0.6, 0.4, 0, 0, 0, 0})));
    CHECK_FALSE(is_soft_label(vec({0.5, 0.3, 0.2, 0, 0, 0})));
}

TEST_CASE("kl_loss reference values")
{
    const Distribution y = vec({0.7, 0, 0.3, 0, 0, 0});
    CHECK(kl_loss(y, y) == 0.0);
    // tests/oracles/kl_reference.py
    CHECK(kl_loss(y, Distribution::Constant(1.0 / 6)) == doctest::Approx(1.18089516717316153778).epsilon(1e-14));
    CHECK(kl_loss(vec({0, 0, 0, 1, 0, 0}), vec({0.1, 0.1, 0.1, 0.5, 0.1, 0.1})) ==
          doctest::Approx(0.693147180559945309417).epsilon(1e-14));
    CHECK(kl_loss(vec({0, 0.5, 0, 0, 0, 0.5}), Distribution::Constant(1.0 / 6)) ==
          doctest::Approx(1.09861228866810969139).epsilon(1e-14));
    // zero probability on the target is clamped to 1e-12
    CHECK(kl_loss(vec({1, 0, 0, 0, 0, 0}), vec({0, 0.2, 0.2, 0.2, 0.2, 0.2})) ==
          doctest::Approx(27.6310211159285482082).epsilon(1e-14));

    Distribution bad = y;
    bad(1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(kl_loss(y, bad), NumericError);
}

TEST_CASE("kl_loss is non-negative")
{
    std::mt19937_64 rng(17);
    for (int i = 0; i < 500; ++i) {
        const int a = static_cast<int>(rng() % 6), b = static_cast<int>((a + 1 + rng() % 5) % 6);
        const int sal = std::array{50, 70, 100}[rng() % 3];
        const Blend x = canonicalize_annotation(emotion_from_index(a),
                                                sal == 100 ? std::nullopt : std::optional(emotion_from_index(b)), sal);
        const SoftLabel y = encode_soft_label(x);
        CHECK(kl_loss(y, testutil::random_distribution(rng)) >= 0.0);
        CHECK(kl_loss(y, y) == 0.0);
    }
}

TEST_CASE("kl_grad_logits")
{
    const Distribution y = vec({0.7, 0, 0.3, 0, 0, 0});
    const Distribution g = kl_grad_logits(y, Distribution::Zero());
    const double s = 1.0 / 6;
    CHECK(g.isApprox(vec({s - 0.7, s, s - 0.3, s, s, s}), 1e-15));

    const Distribution z = vec({0.3, -1.2, 2.0, 0.0, 0.5, -0.1});
    CHECK(kl_grad_logits(softmax(z), z).cwiseAbs().maxCoeff() < 1e-15);

    SUBCASE("central finite differences")
    {
        std::mt19937_64 rng(23);
        std::normal_distribution<double> n(0.0, 2.0);
        double worst = 0.0;
        for (int t = 0; t < 100; ++t) {
            const Distribution yt = testutil::random_distribution(rng);
            Distribution zt;
            for (int i = 0; i < 6; ++i)
                zt(i) = n(rng);
            const Distribution ga = kl_grad_logits(yt, zt);
            const double h = 1e-5;
            for (int i = 0; i < 6; ++i) {
                Distribution zp = zt, zm = zt;
                zp(i) += h;
                zm(i) -= h;
                const double num = (kl_loss(yt, softmax(zp)) - kl_loss(yt, softmax(zm))) / (2 * h);
                const double rel = std::abs(num - ga(i)) / std::max({std::abs(num), std::abs(ga(i)), 1e-3});
                worst = std::max(worst, rel);
            }
        }
        CHECK(worst < 1e-5);
    }
}

TEST_CASE("softmax is shift invariant and stable")
{
    const Distribution z = vec({1000, 999, 0, -1000, 3, 2});
    const Distribution p = softmax(z);
    CHECK(p.allFinite());
    CHECK(std::abs(p.sum() - 1.0) < 1e-15);
    CHECK(softmax(Distribution(z.array() - 500.0)).isApprox(p, 1e-15));
}
