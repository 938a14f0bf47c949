#include "oracles.hpp"
#include "sic/errors.hpp"
#include "sic/metrics.hpp"

#include <gtest/gtest.h>

using namespace sic;

namespace {

LabelVector L(std::vector<std::uint32_t> v) { return LabelVector(std::move(v)); }

}  // namespace

TEST(HungarianAccuracy, HandExamples) {
    EXPECT_DOUBLE_EQ(hungarian_accuracy(L({0, 0, 1, 1}), L({1, 1, 0, 0})), 1.0);
    EXPECT_DOUBLE_EQ(hungarian_accuracy(L({0, 1, 2}), L({0, 1, 2})), 1.0);
    EXPECT_DOUBLE_EQ(hungarian_accuracy(L({0, 0, 1, 1}), L({0, 1, 0, 1})), 0.5);
    EXPECT_DOUBLE_EQ(hungarian_accuracy(L({0, 0, 0, 0}), L({0, 0, 1, 2})), 0.5);
    EXPECT_THROW(hungarian_accuracy(L({0}), L({0, 1})), SizeMismatch);
}

TEST(HungarianAccuracy, MatchesPermutationSearch) {
    Rng rng(13);
    for (int t = 0; t < 150; ++t) {
        const std::size_t c = 1 + rng.index(8), n = 1 + rng.index(60);
        std::vector<std::uint32_t> p(n), y(n);
        for (auto& v : p) v = static_cast<std::uint32_t>(rng.index(c));
        for (auto& v : y) v = static_cast<std::uint32_t>(rng.index(c));
        EXPECT_DOUBLE_EQ(hungarian_accuracy(LabelVector(p, c), LabelVector(y, c)),
                         oracle::permutation_accuracy(p, y, c));
    }
}

TEST(HungarianMax, RectangularPadding) {
    // 2 predicted classes against 3 true classes
    auto acc = hungarian_accuracy(LabelVector({0, 0, 1, 1, 1}, 2), LabelVector({0, 0, 1, 2, 2}, 3));
    EXPECT_DOUBLE_EQ(acc, 0.8);
}

TEST(Nmi, HandExamples) {
    EXPECT_NEAR(nmi(L({0, 1, 1, 2}), L({0, 1, 1, 2})), 1.0, 1e-12);
    EXPECT_NEAR(nmi(L({0, 0, 0, 0}), L({0, 1, 0, 1})), 0.0, 1e-12);
    EXPECT_NEAR(nmi(L({0, 0, 1, 1}), L({0, 1, 0, 1})), 0.0, 1e-12);
}

TEST(Ari, HandExamples) {
    EXPECT_NEAR(ari(L({0, 1, 1, 2}), L({0, 1, 1, 2})), 1.0, 1e-12);
    // Pair counting on the 6 pairs: no agreeing "same" pair, expected index
    // 2 * 2 / 6, max index 2, so ARI = (0 - 2/3) / (2 - 2/3) = -1/2.
    EXPECT_NEAR(ari(L({0, 0, 1, 1}), L({0, 1, 0, 1})), -0.5, 1e-12);
    EXPECT_NEAR(ari(L({0, 0, 1, 1}), L({0, 1, 0, 1})), oracle::pair_count_ari({0, 0, 1, 1}, {0, 1, 0, 1}), 1e-12);
    EXPECT_THROW(ari(L({0}), L({0})), SizeMismatch);
}

TEST(Metrics, RandomAgreementWithOraclesAndRanges) {
    Rng rng(17);
    for (int t = 0; t < 100; ++t) {
        const std::size_t c = 2 + rng.index(5), n = 2 + rng.index(50);
        std::vector<std::uint32_t> p(n), y(n);
        for (auto& v : p) v = static_cast<std::uint32_t>(rng.index(c));
        for (auto& v : y) v = static_cast<std::uint32_t>(rng.index(c));
        const auto m = evaluate(LabelVector(p, c), LabelVector(y, c));
        EXPECT_NEAR(m.ari, oracle::pair_count_ari(p, y), 1e-10);
        EXPECT_NEAR(m.nmi, oracle::direct_nmi(p, y), 1e-10);
        EXPECT_GE(m.acc, 0.0);
        EXPECT_LE(m.acc, 1.0);
        EXPECT_GE(m.nmi, -1e-12);
        EXPECT_LE(m.nmi, 1.0 + 1e-12);
        EXPECT_GE(m.ari, -1.0);
        EXPECT_LE(m.ari, 1.0 + 1e-12);

        // relabel predictions by a random permutation
        std::vector<std::uint32_t> perm(c);
        std::iota(perm.begin(), perm.end(), 0u);
        shuffle(perm, rng);
        std::vector<std::uint32_t> q(n);
        for (std::size_t i = 0; i < n; ++i) q[i] = perm[p[i]];
        const auto mp = evaluate(LabelVector(q, c), LabelVector(y, c));
        EXPECT_DOUBLE_EQ(mp.acc, m.acc);
        EXPECT_NEAR(mp.nmi, m.nmi, 1e-12);
        EXPECT_NEAR(mp.ari, m.ari, 1e-12);

        const auto self = evaluate(LabelVector(y, c), LabelVector(y, c));
        EXPECT_DOUBLE_EQ(self.acc, 1.0);
        EXPECT_NEAR(self.nmi, 1.0, 1e-12);
        EXPECT_NEAR(self.ari, 1.0, 1e-12);
    }
}

TEST(Metrics, JsonShape) {
    const auto j = metrics_to_json(evaluate(L({0, 1}), L({1, 0})));
    EXPECT_NE(j.find("\"acc\": 1.0"), std::string::npos);
    EXPECT_NE(j.find("\"n\": 2"), std::string::npos);
}
