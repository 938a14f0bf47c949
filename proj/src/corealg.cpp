#include "sic/corealg.hpp"

#include "sic/errors.hpp"
#include "sic/parallel.hpp"
#include "sic/random.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>

namespace sic {

namespace {

template <class A, class B>
double dot_impl(std::span<const A> a, std::span<const B> b) {
    if (a.size() != b.size())
        throw DimensionMismatch("dot product of vectors with sizes " + std::to_string(a.size()) + " and " +
                                std::to_string(b.size()));
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += static_cast<double>(a[j]) * static_cast<double>(b[j]);
    return s;
}

template <class Q>
std::size_t nearest_row_impl(std::span<const Q> query, const EmbeddingMatrix& m) {
    std::size_t best = 0;
    double best_sim = -std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const double s = dot_impl(query, m.row(r));
        if (s > best_sim) {
            best_sim = s;
            best = r;
        }
    }
    return best;
}

double sq_dist(std::span<const float> x, const double* c, std::size_t d) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        const double diff = static_cast<double>(x[j]) - c[j];
        s += diff * diff;
    }
    return s;
}

struct LloydState {
    std::vector<double> centers;  // c x d
    std::vector<std::uint32_t> assignment;
    std::vector<double> dist;     // squared distance of each point to its center
    std::vector<double> history;
    std::size_t iterations = 0;
};

void seed_plus_plus(const EmbeddingMatrix& pts, std::size_t c, Rng& rng, std::vector<double>& centers) {
    const std::size_t n = pts.rows(), d = pts.cols();
    centers.assign(c * d, 0.0);
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    std::size_t pick = static_cast<std::size_t>(rng.index(n));
    for (std::size_t l = 0; l < c; ++l) {
        auto r = pts.row(pick);
        std::copy(r.begin(), r.end(), centers.begin() + static_cast<std::ptrdiff_t>(l * d));
        if (l + 1 == c) break;
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], sq_dist(pts.row(i), centers.data() + l * d, d));
            total += d2[i];
        }
        if (total <= 0.0) {
            pick = static_cast<std::size_t>(rng.index(n));
            continue;
        }
        const double target = rng.uniform() * total;
        double acc = 0.0;
        pick = n;
        std::size_t last_positive = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (d2[i] <= 0.0) continue;
            last_positive = i;
            acc += d2[i];
            if (acc > target) {
                pick = i;
                break;
            }
        }
        if (pick == n) pick = last_positive;
    }
}

// Assigns every point to its best-scoring center (ties to the lowest index).
void assign_points(const EmbeddingMatrix& pts, std::size_t c, const std::vector<double>& centers,
                   std::vector<std::uint32_t>& assignment, std::vector<double>& dist) {
    const std::size_t n = pts.rows(), d = pts.cols();
    std::vector<double> sq(c);
    for (std::size_t l = 0; l < c; ++l) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += centers[l * d + j] * centers[l * d + j];
        sq[l] = s;
    }
    assignment.resize(n);
    dist.resize(n);
    parallel_for(n, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            auto x = pts.row(i);
            std::uint32_t best = 0;
            double best_score = -std::numeric_limits<double>::infinity();
            for (std::size_t l = 0; l < c; ++l) {
                double dot = 0.0;
                for (std::size_t j = 0; j < d; ++j) dot += static_cast<double>(x[j]) * centers[l * d + j];
                const double score = 2.0 * dot - sq[l];
                if (score > best_score) {
                    best_score = score;
                    best = static_cast<std::uint32_t>(l);
                }
            }
            assignment[i] = best;
            dist[i] = sq_dist(x, centers.data() + best * d, d);
        }
    });
}

// Moves the farthest point of a multi-member cluster into each empty
// cluster. Returns true if anything changed.
bool repair_empty(const EmbeddingMatrix& pts, std::size_t c, std::vector<double>& centers,
                  std::vector<std::uint32_t>& assignment, std::vector<double>& dist,
                  std::vector<std::size_t>& counts) {
    const std::size_t n = pts.rows(), d = pts.cols();
    bool changed = false;
    for (std::size_t l = 0; l < c; ++l) {
        if (counts[l] != 0) continue;
        std::size_t far = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (counts[assignment[i]] < 2) continue;
            if (far == n || dist[i] > dist[far]) far = i;
        }
        if (far == n) break;  // only possible when c > n, excluded by precondition
        --counts[assignment[far]];
        assignment[far] = static_cast<std::uint32_t>(l);
        counts[l] = 1;
        dist[far] = 0.0;
        auto r = pts.row(far);
        std::copy(r.begin(), r.end(), centers.begin() + static_cast<std::ptrdiff_t>(l * d));
        changed = true;
    }
    return changed;
}

void recompute_means(const EmbeddingMatrix& pts, std::size_t c, const std::vector<std::uint32_t>& assignment,
                     std::vector<double>& centers, std::vector<std::size_t>& counts) {
    const std::size_t n = pts.rows(), d = pts.cols();
    std::vector<double> sums(c * d, 0.0);
    counts.assign(c, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t l = assignment[i];
        ++counts[l];
        auto x = pts.row(i);
        for (std::size_t j = 0; j < d; ++j) sums[l * d + j] += x[j];
    }
    for (std::size_t l = 0; l < c; ++l) {
        if (counts[l] == 0) continue;  // left for repair_empty
        for (std::size_t j = 0; j < d; ++j) centers[l * d + j] = sums[l * d + j] / static_cast<double>(counts[l]);
    }
}

LloydState run_lloyd(const EmbeddingMatrix& pts, const KMeansOptions& opts, Rng& rng) {
    const std::size_t c = opts.clusters, d = pts.cols();
    LloydState st;
    seed_plus_plus(pts, c, rng, st.centers);
    std::vector<std::size_t> counts;
    for (std::size_t it = 0; it < opts.max_iter; ++it) {
        assign_points(pts, c, st.centers, st.assignment, st.dist);
        const double inertia = std::accumulate(st.dist.begin(), st.dist.end(), 0.0);
        assert(st.history.empty() || inertia <= st.history.back() * (1.0 + 1e-9) + 1e-12);
        st.history.push_back(inertia);
        ++st.iterations;

        const auto previous = st.centers;
        recompute_means(pts, c, st.assignment, st.centers, counts);
        if (repair_empty(pts, c, st.centers, st.assignment, st.dist, counts))
            recompute_means(pts, c, st.assignment, st.centers, counts);

        double shift = 0.0;
        for (std::size_t l = 0; l < c; ++l) {
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double diff = st.centers[l * d + j] - previous[l * d + j];
                s += diff * diff;
            }
            shift = std::max(shift, std::sqrt(s));
        }
        if (shift < opts.tol) break;
    }
    return st;
}

// Rounds the centers to float and produces the final assignment against
// exactly those centers, so callers can reproduce it from the result alone.
KMeansResult finalize(const EmbeddingMatrix& pts, std::size_t c, LloydState st) {
    const std::size_t n = pts.rows(), d = pts.cols();
    for (auto& v : st.centers) v = static_cast<double>(static_cast<float>(v));
    assign_points(pts, c, st.centers, st.assignment, st.dist);
    std::vector<std::size_t> counts(c, 0);
    for (auto a : st.assignment) ++counts[a];
    repair_empty(pts, c, st.centers, st.assignment, st.dist, counts);

    KMeansResult res{EmbeddingMatrix::from_doubles(c, d, st.centers), std::move(st.assignment), 0.0, st.iterations,
                     std::move(st.history)};
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) inertia += sq_dist(pts.row(i), st.centers.data() + res.assignment[i] * d, d);
    res.inertia = inertia;
    return res;
}

}  // namespace

double dot_similarity(std::span<const float> a, std::span<const float> b) { return dot_impl(a, b); }
double dot_similarity(std::span<const double> a, std::span<const float> b) { return dot_impl(a, b); }

std::size_t nearest_row(std::span<const double> query, const EmbeddingMatrix& m) { return nearest_row_impl(query, m); }
std::size_t nearest_row(std::span<const float> query, const EmbeddingMatrix& m) { return nearest_row_impl(query, m); }

std::vector<std::size_t> top_k_rows(std::span<const double> query, const EmbeddingMatrix& m, std::size_t k) {
    if (k == 0 || k > m.rows())
        throw KTooLarge("requested " + std::to_string(k) + " nearest rows out of " + std::to_string(m.rows()));
    std::vector<double> sims(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) sims[r] = dot_impl(query, m.row(r));
    std::vector<std::size_t> idx(m.rows());
    std::iota(idx.begin(), idx.end(), 0);
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                      [&](std::size_t a, std::size_t b) { return sims[a] > sims[b] || (sims[a] == sims[b] && a < b); });
    idx.resize(k);
    return idx;
}

double kmeans_score(std::span<const float> x, std::span<const float> center, double center_sq_norm) {
    return 2.0 * dot_impl(x, center) - center_sq_norm;
}

KMeansResult kmeans(const EmbeddingMatrix& points, const KMeansOptions& opts) {
    if (opts.clusters == 0) throw ConfigError("k-means needs at least one cluster");
    if (opts.clusters > points.rows())
        throw TooFewPoints("k-means with c = " + std::to_string(opts.clusters) + " on only " +
                           std::to_string(points.rows()) + " points");
    if (opts.max_iter == 0) throw ConfigError("k-means max_iter must be >= 1");
    const std::size_t restarts = std::max<std::size_t>(1, opts.restarts);

    std::optional<KMeansResult> best;
    for (std::size_t r = 0; r < restarts; ++r) {
        Rng rng(derive_seed(opts.seed, r));
        auto res = finalize(points, opts.clusters, run_lloyd(points, opts, rng));
        if (!best || res.inertia < best->inertia) best = std::move(res);
    }
    return std::move(*best);
}

void NeighborGraph::validate() const {
    if (indices.size() != n * k) throw DataError("neighbor graph storage does not match n*k");
    std::vector<std::uint8_t> seen(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        auto row = neighbors(i);
        for (auto j : row) {
            if (j >= n) throw DataError("neighbor index out of range in row " + std::to_string(i));
            if (j == i) throw DataError("row " + std::to_string(i) + " lists itself as a neighbor");
            if (seen[j]) throw DataError("duplicate neighbor in row " + std::to_string(i));
            seen[j] = 1;
        }
        for (auto j : row) seen[j] = 0;
    }
}

NeighborGraph knn_graph(const EmbeddingMatrix& points, std::size_t k) {
    const std::size_t n = points.rows();
    if (k == 0 || k + 1 > n)
        throw KTooLarge("k = " + std::to_string(k) + " neighbors requested with n = " + std::to_string(n));
    NeighborGraph g{n, k, std::vector<std::uint32_t>(n * k)};
    parallel_for(n, [&](std::size_t b, std::size_t e) {
        std::vector<double> sims(n);
        std::vector<std::uint32_t> cand(n - 1);
        for (std::size_t i = b; i < e; ++i) {
            auto xi = points.row(i);
            for (std::size_t j = 0; j < n; ++j) sims[j] = (j == i) ? 0.0 : dot_impl(xi, points.row(j));
            std::size_t m = 0;
            for (std::size_t j = 0; j < n; ++j)
                if (j != i) cand[m++] = static_cast<std::uint32_t>(j);
            std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end(),
                              [&](std::uint32_t a, std::uint32_t c) {
                                  return sims[a] > sims[c] || (sims[a] == sims[c] && a < c);
                              });
            std::copy(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), g.indices.begin() +
                                                                                     static_cast<std::ptrdiff_t>(i * k));
        }
    });
    return g;
}

std::size_t max_in_degree(const NeighborGraph& g) {
    std::vector<std::size_t> deg(g.n, 0);
    for (auto j : g.indices) ++deg[j];
    return g.n == 0 ? 0 : *std::max_element(deg.begin(), deg.end());
}

}  // namespace sic
