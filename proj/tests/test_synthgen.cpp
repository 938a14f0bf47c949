#include "oracles.hpp"
#include "sic/errors.hpp"
#include "sic/metrics.hpp"
#include "sic/semspace.hpp"
#include "sic/synthgen.hpp"

#include <gtest/gtest.h>

using namespace sic;

TEST(Synthgen, ValidatesSpec) {
    SynthSpec s;
    s.c = 1;
    EXPECT_THROW(generate(s), ConfigError);
    s.c = 3;
    s.d = 1;
    EXPECT_THROW(generate(s), ConfigError);
    s.d = 32;
    s.noise_sigma = -0.1;
    EXPECT_THROW(generate(s), ConfigError);
    SynthSpec crowded;
    crowded.c = 40;
    crowded.d = 2;
    EXPECT_THROW(generate(crowded), ConfigError);
}

TEST(Synthgen, ShapesAndDeterminism) {
    SynthSpec s;
    s.distractor_nouns = 5;
    s.seed = 3;
    auto a = generate(s);
    auto b = generate(s);
    EXPECT_TRUE(bitwise_equal(a.images, b.images));
    EXPECT_TRUE(bitwise_equal(a.lexicon.embeddings(), b.lexicon.embeddings()));
    EXPECT_EQ(a.lexicon.nouns(), b.lexicon.nouns());
    EXPECT_EQ(a.truth, b.truth);
    EXPECT_EQ(a.images.rows(), 600u);
    EXPECT_EQ(a.lexicon.size(), 3u * 6u + 50u + 1u);
    EXPECT_TRUE(a.images.normalized());
    for (std::size_t l = 0; l < 3; ++l)
        EXPECT_EQ(std::count(a.truth.labels.begin(), a.truth.labels.end(), l), 200);
    for (std::size_t x = 0; x < 3; ++x)
        for (std::size_t y = x + 1; y < 3; ++y)
            EXPECT_LE(dot_similarity(a.directions.row(x), a.directions.row(y)), kMaxDirectionDot + 1e-6);
    s.seed = 4;
    EXPECT_FALSE(bitwise_equal(a.images, generate(s).images));
}

TEST(Synthgen, ZeroNoiseGivesExactClusters) {
    SynthSpec s;
    s.noise_sigma = 0.0;
    auto data = generate(s);
    for (std::size_t i = 0; i < data.images.rows(); ++i)
        for (std::size_t t = 0; t < s.d; ++t)
            EXPECT_EQ(data.images.at(i, t), data.directions.at(data.truth.labels[i], t));
    auto km = kmeans(data.images, {3, 0, 300, 1e-6, 5});
    EXPECT_DOUBLE_EQ(hungarian_accuracy(LabelVector(km.assignment, 3), data.truth), 1.0);
}

TEST(Synthgen, BenchmarkIsEasyForKMeans) {
    SynthSpec s;
    s.seed = 7;
    auto data = generate(s);
    auto km = kmeans(data.images, {3, 1, 300, 1e-6, 10});
    EXPECT_GE(hungarian_accuracy(LabelVector(km.assignment, 3), data.truth), 0.95);
}

TEST(Synthgen, TruthNounsAreNearestToDirectionsAtLowNoise) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        SynthSpec s;
        s.seed = seed;
        s.noun_noise = 0.1;
        s.distractor_nouns = 5;
        auto data = generate(s);
        for (std::size_t l = 0; l < s.c; ++l)
            EXPECT_EQ(nearest_row(data.directions.row(l), data.lexicon.embeddings()), data.truth_nouns[l]);
    }
}

TEST(Synthgen, GeneralWordHasLowestUniqueness) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        SynthSpec s;
        s.seed = seed;
        s.distractor_nouns = 3;
        auto data = generate(s);
        EXPECT_EQ(data.lexicon.nouns()[data.general_word], kGeneralWord);
        const auto scores = uniqueness_scores(data.lexicon, lexicon_centroid(data.lexicon));
        EXPECT_EQ(static_cast<std::size_t>(std::min_element(scores.begin(), scores.end()) - scores.begin()),
                  data.general_word);
        EXPECT_LT(scores[data.general_word], 0.05);
    }
}
