#pragma once

#include "sic/corealg.hpp"
#include "sic/embedstore.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace sic {

/// Filtered, task-relevant noun set and the thresholds that produced it.
struct SemanticSpace {
    NounLexicon lexicon;
    double uniqueness_threshold = 0.0;
    std::size_t per_center_count = 0;
    std::size_t source_size = 0;  // size of the unfiltered lexicon
};

/// 1 - cos(w, e). Throws ZeroVector when either vector has zero norm.
double uniqueness_score(std::span<const float> w, std::span<const double> e);
double uniqueness_score(std::span<const float> w, std::span<const float> e);

/// Mean of the lexicon's embedding rows.
std::vector<double> lexicon_centroid(const NounLexicon& lex);

/// Uniqueness score of every noun against the given centroid.
std::vector<double> uniqueness_scores(const NounLexicon& lex, std::span<const double> centroid);

/// Keeps the nouns with score >= gamma_u, in input order. The centroid is
/// that of the full input lexicon. Throws EmptyResult when nothing passes.
NounLexicon filter_unique(const NounLexicon& lex, double gamma_u);

/// Same, against a caller-frozen centroid.
NounLexicon filter_unique(const NounLexicon& lex, double gamma_u, std::span<const double> centroid);

/// Clusters the images into c groups and keeps, for each center, the
/// gamma_r nouns with the largest dot product. The per-center lists are
/// concatenated in center order and deduplicated keeping first occurrence.
SemanticSpace filter_relevant(const NounLexicon& lex, const EmbeddingMatrix& images, std::size_t c,
                              std::size_t gamma_r, const KMeansOptions& kmeans_opts);

/// Same, reusing precomputed image cluster centers.
SemanticSpace filter_relevant(const NounLexicon& lex, const EmbeddingMatrix& centers, std::size_t gamma_r);

/// Both filters in sequence.
SemanticSpace build_semantic_space(const NounLexicon& lex, const EmbeddingMatrix& images, std::size_t c,
                                   double gamma_u, std::size_t gamma_r, const KMeansOptions& kmeans_opts);

}  // namespace sic
