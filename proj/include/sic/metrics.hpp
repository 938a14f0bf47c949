#pragma once

#include "sic/embedstore.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace sic {

/// Counts of (predicted, true) label pairs.
struct ContingencyTable {
    std::size_t pred_classes = 0;
    std::size_t true_classes = 0;
    std::vector<std::uint64_t> counts;  // pred_classes x true_classes
    std::uint64_t n = 0;

    std::uint64_t at(std::size_t p, std::size_t t) const { return counts[p * true_classes + t]; }
};

/// Throws SizeMismatch when the label vectors differ in length.
ContingencyTable contingency(const LabelVector& pred, const LabelVector& truth);

/// Maximum-weight perfect matching on a square weight matrix (row-major).
/// Returns, for each row, the matched column.
std::vector<std::size_t> hungarian_max(const std::vector<double>& weights, std::size_t size);

/// Best one-to-one class matching accuracy.
double hungarian_accuracy(const LabelVector& pred, const LabelVector& truth);

/// Mutual information normalized by the geometric mean of the entropies
/// (natural log).
double nmi(const LabelVector& pred, const LabelVector& truth);

/// Adjusted Rand index. Throws SizeMismatch when n < 2.
double ari(const LabelVector& pred, const LabelVector& truth);

struct ClusterMetrics {
    double acc = 0.0;
    double nmi = 0.0;
    double ari = 0.0;
    std::size_t n = 0;
    std::size_t c = 0;
};

ClusterMetrics evaluate(const LabelVector& pred, const LabelVector& truth);

/// {"acc", "nmi", "ari", "n", "c"}
std::string metrics_to_json(const ClusterMetrics& m);

}  // namespace sic
