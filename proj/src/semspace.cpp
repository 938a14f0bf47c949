#include "sic/semspace.hpp"

#include "sic/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sic {

namespace {

template <class E>
double uniqueness_impl(std::span<const float> w, std::span<const E> e) {
    if (w.size() != e.size())
        throw DimensionMismatch("uniqueness score of vectors with sizes " + std::to_string(w.size()) + " and " +
                                std::to_string(e.size()));
    double dot = 0.0, ww = 0.0, ee = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) {
        dot += static_cast<double>(w[j]) * static_cast<double>(e[j]);
        ww += static_cast<double>(w[j]) * w[j];
        ee += static_cast<double>(e[j]) * static_cast<double>(e[j]);
    }
    if (ww == 0.0 || ee == 0.0) throw ZeroVector("uniqueness score is undefined for a zero vector");
    return 1.0 - dot / (std::sqrt(ww) * std::sqrt(ee));
}

}  // namespace

double uniqueness_score(std::span<const float> w, std::span<const double> e) { return uniqueness_impl(w, e); }
double uniqueness_score(std::span<const float> w, std::span<const float> e) { return uniqueness_impl(w, e); }

std::vector<double> lexicon_centroid(const NounLexicon& lex) {
    const auto& m = lex.embeddings();
    std::vector<double> e(m.cols(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        auto r = m.row(i);
        for (std::size_t j = 0; j < m.cols(); ++j) e[j] += r[j];
    }
    for (auto& v : e) v /= static_cast<double>(m.rows());
    return e;
}

std::vector<double> uniqueness_scores(const NounLexicon& lex, std::span<const double> centroid) {
    std::vector<double> scores(lex.size());
    for (std::size_t i = 0; i < lex.size(); ++i) scores[i] = uniqueness_score(lex.embeddings().row(i), centroid);
    return scores;
}

NounLexicon filter_unique(const NounLexicon& lex, double gamma_u) {
    return filter_unique(lex, gamma_u, lexicon_centroid(lex));
}

NounLexicon filter_unique(const NounLexicon& lex, double gamma_u, std::span<const double> centroid) {
    const auto scores = uniqueness_scores(lex, centroid);
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < scores.size(); ++i)
        if (scores[i] >= gamma_u) keep.push_back(i);
    if (keep.empty()) {
        const double best = *std::max_element(scores.begin(), scores.end());
        throw EmptyResult("no noun reaches uniqueness threshold " + std::to_string(gamma_u) +
                          " (max observed score " + std::to_string(best) + ")");
    }
    return lex.subset(keep);
}

SemanticSpace filter_relevant(const NounLexicon& lex, const EmbeddingMatrix& centers, std::size_t gamma_r) {
    if (gamma_r == 0) throw ConfigError("gamma_r must be >= 1");
    if (centers.cols() != lex.embeddings().cols())
        throw DimensionMismatch("image centers have d = " + std::to_string(centers.cols()) + " but nouns have d = " +
                                std::to_string(lex.embeddings().cols()));
    const std::size_t per_center = std::min(gamma_r, lex.size());
    std::vector<std::size_t> order;
    std::vector<std::uint8_t> taken(lex.size(), 0);
    for (std::size_t l = 0; l < centers.rows(); ++l) {
        auto r = centers.row(l);
        const std::vector<double> center(r.begin(), r.end());
        for (std::size_t idx : top_k_rows(center, lex.embeddings(), per_center)) {
            if (taken[idx]) continue;
            taken[idx] = 1;
            order.push_back(idx);
        }
    }
    return SemanticSpace{lex.subset(order), 0.0, gamma_r, lex.size()};
}

SemanticSpace filter_relevant(const NounLexicon& lex, const EmbeddingMatrix& images, std::size_t c,
                              std::size_t gamma_r, const KMeansOptions& kmeans_opts) {
    auto opts = kmeans_opts;
    opts.clusters = c;
    const auto km = kmeans(images, opts);
    return filter_relevant(lex, km.centers, gamma_r);
}

SemanticSpace build_semantic_space(const NounLexicon& lex, const EmbeddingMatrix& images, std::size_t c,
                                   double gamma_u, std::size_t gamma_r, const KMeansOptions& kmeans_opts) {
    const auto unique = filter_unique(lex, gamma_u);
    auto space = filter_relevant(unique, images, c, gamma_r, kmeans_opts);
    space.uniqueness_threshold = gamma_u;
    space.source_size = lex.size();
    return space;
}

}  // namespace sic
