#include "oracles.hpp"
#include "sic/errors.hpp"
#include "sic/pseudolab.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace sic;

namespace {

SoftAssignment column(std::vector<double> col) {
    std::vector<double> q;
    for (double v : col) {
        q.push_back(v);
        q.push_back(1.0 - v);
    }
    return SoftAssignment(col.size(), 2, q);
}

SoftAssignment random_q(std::size_t n, std::size_t c, Rng& rng) {
    std::vector<double> q(n * c);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> z(c);
        for (auto& v : z) v = rng.normal() * 2;
        softmax(z, {q.data() + i * c, c});
    }
    return SoftAssignment(n, c, q);
}

}  // namespace

TEST(Strategy, ParseAndPrint) {
    for (auto s : {Strategy::Direct, Strategy::CenterBased, Strategy::AdjustedCenterBased})
        EXPECT_EQ(parse_strategy(to_string(s)), s);
    EXPECT_THROW(parse_strategy("nearest"), ConfigError);
}

TEST(SelectTop, HandExamples) {
    auto sel = select_top(column({0.9, 0.8, 0.1, 0.7}), 2);
    EXPECT_DOUBLE_EQ(sel.thresholds[0], 0.8);
    EXPECT_TRUE(sel.selected(0, 0));
    EXPECT_TRUE(sel.selected(1, 0));
    EXPECT_FALSE(sel.selected(2, 0));
    EXPECT_FALSE(sel.selected(3, 0));

    auto all = select_top(column({0.9, 0.8, 0.1, 0.7}), 4);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_TRUE(all.selected(i, 0));
    EXPECT_DOUBLE_EQ(all.thresholds[0], 0.1);

    auto ties = select_top(column({0.5, 0.5, 0.5}), 2);
    EXPECT_TRUE(ties.selected(0, 0));
    EXPECT_TRUE(ties.selected(1, 0));
    EXPECT_FALSE(ties.selected(2, 0));

    EXPECT_THROW(select_top(column({0.5, 0.5}), 3), BudgetTooLarge);
    EXPECT_THROW(select_top(column({0.5, 0.5}), 0), BudgetTooLarge);
}

TEST(SelectTop, ColumnSumsAndThresholds) {
    Rng rng(1);
    for (int t = 0; t < 30; ++t) {
        const std::size_t n = 1 + rng.index(60), c = 1 + rng.index(6), budget = 1 + rng.index(n);
        auto q = random_q(n, c, rng);
        auto sel = select_top(q, budget);
        for (std::size_t l = 0; l < c; ++l) {
            std::size_t sum = 0;
            for (std::size_t i = 0; i < n; ++i) {
                sum += sel.selected(i, l);
                if (sel.selected(i, l)) EXPECT_GE(q.at(i, l), sel.thresholds[l]);
                else EXPECT_LE(q.at(i, l), sel.thresholds[l]);
            }
            EXPECT_EQ(sum, budget);
        }
    }
}

TEST(CentersFromSelection, SnapsMeanToNearestNoun) {
    NounLexicon sem({"a", "b", "ab"}, EmbeddingMatrix(3, 2, {1, 0, 0, 1, 0.7071f, 0.7071f}, true));
    EmbeddingMatrix images(2, 2, {1, 0, 0, 1});
    SoftAssignment q(2, 1, {1.0, 1.0});
    auto h = centers_from_selection(images, select_top(q, 2), sem);
    EXPECT_EQ(h.noun_index, std::vector<std::size_t>{2});
    EXPECT_EQ(h.centers.at(0, 0), 0.7071f);

    EmbeddingMatrix copies(3, 2, {0, 1, 0, 1, 0, 1});
    SoftAssignment q2(3, 2, {0.5, 0.5, 0.5, 0.5, 0.5, 0.5});
    auto dup = centers_from_selection(copies, select_top(q2, 3), sem);
    EXPECT_EQ(dup.noun_index, (std::vector<std::size_t>{1, 1}));
    EXPECT_EQ(dup.duplicate_rows(), 1u);
    EXPECT_FALSE(dup.warnings.empty());
}

TEST(CentersFromSelection, EmptyColumn) {
    NounLexicon sem({"a"}, EmbeddingMatrix(1, 2, {1, 0}, true));
    EmbeddingMatrix images(2, 2, {1, 0, 0, 1});
    TopSelection sel{2, 2, {1, 0, 1, 0}, {0, 0}, 1};
    EXPECT_THROW(centers_from_selection(images, sel, sem), EmptyColumn);
}

TEST(AdjustCenters, HandExamplesAndIdentity) {
    EmbeddingMatrix sem(3, 2, {1, 0, 0.8f, 0.6f, 0, 1}, true);
    SemanticCenters h{EmbeddingMatrix(1, 2, {1, 0}), Strategy::CenterBased, {0}, {}};
    auto a = adjust_centers(h, sem, 2);
    EXPECT_FLOAT_EQ(a.centers.at(0, 0), 0.9f);
    EXPECT_FLOAT_EQ(a.centers.at(0, 1), 0.3f);
    EXPECT_EQ(a.strategy, Strategy::AdjustedCenterBased);

    auto all = adjust_centers(h, sem, 3);
    EXPECT_FLOAT_EQ(all.centers.at(0, 0), 0.6f);
    EXPECT_FLOAT_EQ(all.centers.at(0, 1), static_cast<float>(1.6 / 3));

    auto renorm = adjust_centers(h, sem, 2, true);
    EXPECT_NEAR(std::hypot(renorm.centers.at(0, 0), renorm.centers.at(0, 1)), 1.0, 1e-6);

    EXPECT_THROW(adjust_centers(h, sem, 0), KTooLarge);
    EXPECT_THROW(adjust_centers(h, sem, 4), KTooLarge);

    Rng rng(2);
    auto big = oracle::random_unit_matrix(40, 8, rng);
    NounLexicon lex([] {
        std::vector<std::string> v;
        for (int i = 0; i < 40; ++i) v.push_back("n" + std::to_string(i));
        return v;
    }(), big);
    auto images = oracle::random_unit_matrix(50, 8, rng);
    auto hc = centers_from_selection(images, select_top(random_q(50, 4, rng), 12), lex);
    const auto same = adjust_centers(hc, big, 1).centers;
    EXPECT_TRUE(std::equal(same.data().begin(), same.data().end(), hc.centers.data().begin(), hc.centers.data().end()));
}

TEST(CentersDirect, HandExamples) {
    EmbeddingMatrix sem(2, 2, {1, 0, 0, 1}, true);
    EmbeddingMatrix images(4, 2, {0.99f, 0.1f, 0.95f, 0.3f, 0.1f, 0.99f, 0.3f, 0.95f});
    auto h = centers_direct(images, sem, 2, {2, 0, 300, 1e-6, 4});
    std::set<std::pair<float, float>> got;
    for (std::size_t l = 0; l < 2; ++l) got.insert({h.centers.at(l, 0), h.centers.at(l, 1)});
    EXPECT_EQ(got, (std::set<std::pair<float, float>>{{1.f, 0.f}, {0.f, 1.f}}));

    EmbeddingMatrix single(1, 2, {0.6f, 0.8f}, true);
    auto one = centers_direct(images, single, 1, {1, 0, 300, 1e-6, 2});
    EXPECT_EQ(one.centers.at(0, 0), 0.6f);

    auto same = centers_direct(images, single, 3, {3, 0, 300, 1e-6, 2});
    for (std::size_t l = 0; l < 3; ++l) EXPECT_EQ(same.centers.at(l, 1), 0.8f);
    EXPECT_FALSE(same.warnings.empty());
}

TEST(CentersDirect, EquidistantImageMapsToLowerIndex) {
    EmbeddingMatrix sem(2, 2, {1, 0, 0, 1}, true);
    EmbeddingMatrix images(1, 2, {0.7071068f, 0.7071068f});
    auto h = centers_direct(images, sem, 1, {1, 0, 300, 1e-6, 1});
    EXPECT_EQ(h.centers.at(0, 0), 1.0f);
}

TEST(AssignPseudoLabels, HandExamples) {
    SemanticCenters h{EmbeddingMatrix(2, 2, {1, 0, 0, 1}), Strategy::CenterBased, {}, {}};
    auto p = assign_pseudo_labels(EmbeddingMatrix(3, 2, {2, 0, 1, 1, 0, 1}), h);
    EXPECT_EQ(p.labels, (std::vector<std::uint32_t>{0, 0, 1}));
    EXPECT_EQ(p.onehot(0, 0), 1);
    EXPECT_EQ(p.onehot(0, 1), 0);
    double probs[2];
    const double z[] = {2, 0};
    softmax(z, probs);
    EXPECT_NEAR(probs[0], 0.881, 1e-3);
}

TEST(AssignPseudoLabels, InvariantUnderPositiveScaling) {
    Rng rng(6);
    for (int t = 0; t < 20; ++t) {
        auto images = oracle::random_unit_matrix(40, 6, rng);
        auto centers = oracle::random_unit_matrix(4, 6, rng);
        SemanticCenters h{centers, Strategy::AdjustedCenterBased, {}, {}};
        const auto base = assign_pseudo_labels(images, h).labels;
        for (float s : {0.5f, 2.0f, 8.0f}) {
            std::vector<float> v(centers.data().begin(), centers.data().end());
            for (auto& x : v) x *= s;
            SemanticCenters hs{EmbeddingMatrix(4, 6, v), h.strategy, {}, {}};
            EXPECT_EQ(assign_pseudo_labels(images, hs).labels, base);
        }
    }
}

TEST(PseudoLabelAccuracy, HandExamples) {
    PseudoLabelSet p{{0, 0, 1, 1}, 2, Strategy::Direct, 0};
    EXPECT_DOUBLE_EQ(pseudo_label_accuracy(p, LabelVector({0, 0, 1, 1})), 1.0);
    EXPECT_DOUBLE_EQ(pseudo_label_accuracy(p, LabelVector({1, 1, 0, 0})), 1.0);
    EXPECT_DOUBLE_EQ(pseudo_label_accuracy(p, LabelVector({0, 1, 0, 1})), 0.5);
    EXPECT_THROW(pseudo_label_accuracy(p, LabelVector({0, 1})), SizeMismatch);
}

TEST(SoftAssignment, Validation) {
    EXPECT_THROW(SoftAssignment(1, 2, {0.6, 0.6}), DataError);
    EXPECT_THROW(SoftAssignment(1, 2, {1.5, -0.5}), DataError);
    EXPECT_NO_THROW(SoftAssignment(1, 2, {1.0, 0.0}));
    SoftAssignment q(2, 3, {0.2, 0.4, 0.4, 0.5, 0.25, 0.25});
    EXPECT_EQ(q.argmax(), (std::vector<std::uint32_t>{1, 0}));
}
