#pragma once

#include "sic/embedstore.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace sic {

/// Sum of a_j * b_j accumulated in double. Throws DimensionMismatch.
double dot_similarity(std::span<const float> a, std::span<const float> b);
double dot_similarity(std::span<const double> a, std::span<const float> b);

/// Index of the row of `m` with the largest dot product with `query`;
/// ties go to the lowest index.
std::size_t nearest_row(std::span<const double> query, const EmbeddingMatrix& m);
std::size_t nearest_row(std::span<const float> query, const EmbeddingMatrix& m);

/// The k rows of `m` most similar to `query`, sorted by descending dot
/// product with ties broken by lower index. Throws KTooLarge.
std::vector<std::size_t> top_k_rows(std::span<const double> query, const EmbeddingMatrix& m, std::size_t k);

struct KMeansOptions {
    std::size_t clusters = 2;
    std::uint64_t seed = 0;
    std::size_t max_iter = 300;
    double tol = 1e-6;       // stop when the largest center displacement drops below this
    std::size_t restarts = 10;  // independent seedings; the lowest inertia wins
};

struct KMeansResult {
    EmbeddingMatrix centers;              // c x d
    std::vector<std::uint32_t> assignment;  // n entries, each < c
    double inertia = 0.0;                 // sum of squared distances to assigned centers
    std::size_t iterations = 0;
    std::vector<double> inertia_history;  // per Lloyd iteration of the winning restart
};

/// k-means++ seeding followed by Lloyd iterations, in Euclidean distance.
/// Empty clusters are repaired by moving the point farthest from its center
/// into a new singleton cluster. Throws TooFewPoints when c > n and
/// ConfigError for c == 0 or max_iter == 0.
KMeansResult kmeans(const EmbeddingMatrix& points, const KMeansOptions& opts);

/// Assignment score used by k-means: 2 x.r - ||r||^2. Maximizing it is the
/// same as minimizing ||x - r||^2.
double kmeans_score(std::span<const float> x, std::span<const float> center, double center_sq_norm);

/// Exact k-nearest-neighbor lists (self excluded) by dot product.
struct NeighborGraph {
    std::size_t n = 0;
    std::size_t k = 0;
    std::vector<std::uint32_t> indices;  // n x k, row i sorted by descending similarity

    std::span<const std::uint32_t> neighbors(std::size_t i) const { return {indices.data() + i * k, k}; }

    /// Throws DataError if any row contains itself, duplicates or out-of-range ids.
    void validate() const;
};

/// Brute-force top-k by dot product with ties broken by lower index.
/// Throws KTooLarge unless 1 <= k <= n - 1.
NeighborGraph knn_graph(const EmbeddingMatrix& points, std::size_t k);

/// Largest number of neighbor lists any single node appears in.
std::size_t max_in_degree(const NeighborGraph& g);

}  // namespace sic
