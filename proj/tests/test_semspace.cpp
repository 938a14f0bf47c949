#include "oracles.hpp"
#include "sic/errors.hpp"
#include "sic/semspace.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace sic;

namespace {

NounLexicon two_nouns() { return NounLexicon({"x", "y"}, EmbeddingMatrix(2, 2, {1, 0, 0, 1}, true)); }

}  // namespace

TEST(Uniqueness, HandExamples) {
    const float w[] = {0.6f, 0.8f}, o[] = {-0.8f, 0.6f};
    EXPECT_NEAR(uniqueness_score(w, std::span<const float>(w)), 0.0, 1e-7);
    EXPECT_NEAR(uniqueness_score(w, std::span<const float>(o)), 1.0, 1e-7);
    auto lex = two_nouns();
    auto e = lexicon_centroid(lex);
    EXPECT_DOUBLE_EQ(e[0], 0.5);
    auto s = uniqueness_scores(lex, e);
    EXPECT_NEAR(s[0], 1.0 - 0.5 / std::sqrt(0.5), 1e-12);
    EXPECT_NEAR(s[0], 0.29289, 1e-5);
    const float z[] = {0, 0};
    EXPECT_THROW(uniqueness_score(w, std::span<const float>(z)), ZeroVector);
}

TEST(FilterUnique, Thresholds) {
    auto lex = two_nouns();
    EXPECT_EQ(filter_unique(lex, 0.0).size(), 2u);
    EXPECT_EQ(filter_unique(lex, 0.29).size(), 2u);
    EXPECT_THROW(filter_unique(lex, 0.3), EmptyResult);
}

TEST(FilterUnique, MonotoneAndIdempotentWithFrozenCentroid) {
    Rng rng(5);
    auto emb = oracle::random_unit_matrix(60, 6, rng);
    std::vector<std::string> names;
    for (int i = 0; i < 60; ++i) names.push_back("n" + std::to_string(i));
    NounLexicon lex(names, emb);
    const auto e = lexicon_centroid(lex);
    std::size_t prev = lex.size() + 1;
    for (double g = 0.0; g <= 1.0; g += 0.1) {
        const auto once = filter_unique(lex, g, e);
        EXPECT_LE(once.size(), prev);
        prev = once.size();
        EXPECT_EQ(filter_unique(once, g, e).nouns(), once.nouns());
        for (double s : uniqueness_scores(once, e)) EXPECT_GE(s, g);
    }
}

TEST(FilterRelevant, FullAndDedupCases) {
    auto lex = NounLexicon({"a", "b", "c"}, EmbeddingMatrix(3, 2, {1, 0, 0, 1, 0.7071f, 0.7071f}, true));
    EmbeddingMatrix images(4, 2, {1, 0, 0.99f, 0.141f, 0, 1, 0.141f, 0.99f});
    auto all = filter_relevant(lex, images, 2, 3, {2, 0, 300, 1e-6, 4});
    EXPECT_EQ(all.lexicon.size(), 3u);

    auto disjoint = filter_relevant(lex, images, 2, 1, {2, 0, 300, 1e-6, 4});
    EXPECT_EQ(std::set<std::string>(disjoint.lexicon.nouns().begin(), disjoint.lexicon.nouns().end()),
              (std::set<std::string>{"a", "b"}));

    EmbeddingMatrix same(2, 2, {0.7f, 0.71f, 0.71f, 0.7f});
    auto shared = filter_relevant(lex, same, 2, 1, {2, 0, 300, 1e-6, 4});
    EXPECT_EQ(shared.lexicon.nouns(), std::vector<std::string>{"c"});

    EXPECT_THROW(filter_relevant(lex, images, 2, 0, {2, 0, 300, 1e-6, 4}), ConfigError);
}

TEST(FilterRelevant, MonotoneInGammaRAndNoSynthesis) {
    Rng rng(9);
    auto emb = oracle::random_unit_matrix(80, 5, rng);
    std::vector<std::string> names;
    for (int i = 0; i < 80; ++i) names.push_back("w" + std::to_string(i));
    NounLexicon lex(names, emb);
    auto images = oracle::random_blobs(90, 5, 3, 0.2, rng);
    std::set<std::string> source(names.begin(), names.end());
    std::size_t prev = 0;
    for (std::size_t g : {1u, 2u, 5u, 10u, 40u, 80u, 200u}) {
        auto s = filter_relevant(lex, images, 3, g, {3, 1, 300, 1e-6, 4});
        EXPECT_GE(s.lexicon.size(), prev);
        EXPECT_LE(s.lexicon.size(), 3 * g);
        prev = s.lexicon.size();
        for (const auto& w : s.lexicon.nouns()) EXPECT_TRUE(source.count(w));
        for (std::size_t i = 0; i < s.lexicon.size(); ++i) {
            const auto it = std::find(names.begin(), names.end(), s.lexicon.nouns()[i]);
            const auto src = static_cast<std::size_t>(it - names.begin());
            for (std::size_t t = 0; t < 5; ++t) EXPECT_EQ(s.lexicon.embeddings().at(i, t), emb.at(src, t));
        }
    }
    EXPECT_EQ(prev, 80u);
}

TEST(BuildSemanticSpace, RemovesGeneralWord) {
    NounLexicon lex({"a", "b", "general"},
                    EmbeddingMatrix(3, 2, {1, 0, 0, 1, 0.7071068f, 0.7071068f}, true));
    EmbeddingMatrix images(2, 2, {1, 0, 0, 1});
    auto s = build_semantic_space(lex, images, 2, 0.05, 200, {2, 0, 300, 1e-6, 2});
    EXPECT_EQ(std::set<std::string>(s.lexicon.nouns().begin(), s.lexicon.nouns().end()),
              (std::set<std::string>{"a", "b"}));
    EXPECT_EQ(s.source_size, 3u);
}
