#pragma once

#include "sic/corealg.hpp"
#include "sic/embedstore.hpp"
#include "sic/soft_assignment.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sic {

/// How the semantic centers are derived.
enum class Strategy {
    Direct,               // snap each image to its nearest noun, then k-means on those nouns
    CenterBased,          // nearest noun to each confident image-cluster mean
    AdjustedCenterBased,  // mean of the nouns surrounding each center-based noun
};

std::string_view to_string(Strategy s);
/// Accepts "direct", "center" and "adjusted". Throws ConfigError.
Strategy parse_strategy(std::string_view name);

struct SemanticCenters {
    EmbeddingMatrix centers;  // c x d
    Strategy strategy;
    std::vector<std::size_t> noun_index;  // CenterBased/Adjusted: noun chosen per center
    std::vector<std::string> warnings;

    /// Number of center rows that duplicate an earlier row.
    std::size_t duplicate_rows() const;
};

/// Top-xi_c selection per cluster column.
struct TopSelection {
    std::size_t rows = 0;
    std::size_t clusters = 0;
    std::vector<std::uint8_t> z;      // rows x clusters, 1 = selected
    std::vector<double> thresholds;  // kappa per column
    std::size_t budget = 0;

    bool selected(std::size_t i, std::size_t l) const { return z[i * clusters + l] != 0; }
};

/// One-hot pseudo-labels, stored as the index of the hot entry.
struct PseudoLabelSet {
    std::vector<std::uint32_t> labels;
    std::size_t clusters = 0;
    Strategy strategy = Strategy::AdjustedCenterBased;
    std::size_t epoch = 0;

    std::uint8_t onehot(std::size_t i, std::size_t l) const { return labels[i] == l ? 1 : 0; }
    std::size_t size() const { return labels.size(); }
};

/// Direct mapping: each image becomes its nearest semantic row, and the c
/// centers are k-means centroids of that multiset.
SemanticCenters centers_direct(const EmbeddingMatrix& images, const EmbeddingMatrix& semantics, std::size_t c,
                               const KMeansOptions& kmeans_opts);

/// Per column, selects the budget highest-probability rows (ties to the
/// lower row). Throws BudgetTooLarge unless 1 <= budget <= n.
TopSelection select_top(const SoftAssignment& q, std::size_t budget);

/// Mean image of each selected column, snapped to its nearest noun.
SemanticCenters centers_from_selection(const EmbeddingMatrix& images, const TopSelection& sel,
                                       const NounLexicon& semantics);

/// Replaces each center by the mean of its xi_a nearest semantic rows.
/// Throws KTooLarge unless 1 <= xi_a <= semantics.rows().
SemanticCenters adjust_centers(const SemanticCenters& h, const EmbeddingMatrix& semantics, std::size_t xi_a,
                               bool renormalize = false);

/// p_i = one-hot(argmax_l u_i . h_l), ties to the lower l.
PseudoLabelSet assign_pseudo_labels(const EmbeddingMatrix& images, const SemanticCenters& h);

/// Hungarian-matched accuracy of the pseudo-labels.
double pseudo_label_accuracy(const PseudoLabelSet& p, const LabelVector& truth);

/// JSON object {"strategy", "epoch", "clusters", "labels"}.
std::string pseudo_labels_to_json(const PseudoLabelSet& p);

}  // namespace sic
