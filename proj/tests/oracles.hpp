#pragma once

// Brute-force reference implementations used to check the engine. Each one
// follows the textbook definition directly and shares no code with the
// library beyond the data types.

#include "sic/clusterhead.hpp"
#include "sic/embedstore.hpp"
#include "sic/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace oracle {

// Best accuracy over every injective relabeling of predicted classes.
inline double permutation_accuracy(const std::vector<std::uint32_t>& pred, const std::vector<std::uint32_t>& truth,
                                   std::size_t classes) {
    std::vector<std::size_t> perm(classes);
    std::iota(perm.begin(), perm.end(), 0);
    std::size_t best = 0;
    do {
        std::size_t hit = 0;
        for (std::size_t i = 0; i < pred.size(); ++i)
            if (perm[pred[i]] == truth[i]) ++hit;
        best = std::max(best, hit);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return static_cast<double>(best) / static_cast<double>(pred.size());
}

// Adjusted Rand index from explicit pair counting over all i < j.
inline double pair_count_ari(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
    const std::size_t n = a.size();
    double both = 0, in_a = 0, in_b = 0, pairs = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool sa = a[i] == a[j], sb = b[i] == b[j];
            both += (sa && sb) ? 1 : 0;
            in_a += sa ? 1 : 0;
            in_b += sb ? 1 : 0;
            pairs += 1;
        }
    const double expected = in_a * in_b / pairs;
    const double max_index = 0.5 * (in_a + in_b);
    if (max_index == expected) return 1.0;
    return (both - expected) / (max_index - expected);
}

// Mutual information and entropies by summing over every observed pair of
// labels, geometric-mean normalization.
inline double direct_nmi(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
    const double n = static_cast<double>(a.size());
    auto count = [&](auto pred) {
        double c = 0;
        for (std::size_t i = 0; i < a.size(); ++i)
            if (pred(i)) c += 1;
        return c;
    };
    const auto ma = *std::max_element(a.begin(), a.end()) + 1;
    const auto mb = *std::max_element(b.begin(), b.end()) + 1;
    double mi = 0, ha = 0, hb = 0;
    for (std::uint32_t x = 0; x < ma; ++x) {
        const double px = count([&](std::size_t i) { return a[i] == x; }) / n;
        if (px > 0) ha -= px * std::log(px);
        for (std::uint32_t y = 0; y < mb; ++y) {
            const double py = count([&](std::size_t i) { return b[i] == y; }) / n;
            const double pxy = count([&](std::size_t i) { return a[i] == x && b[i] == y; }) / n;
            if (pxy > 0) mi += pxy * std::log(pxy / (px * py));
        }
    }
    for (std::uint32_t y = 0; y < mb; ++y) {
        const double py = count([&](std::size_t i) { return b[i] == y; }) / n;
        if (py > 0) hb -= py * std::log(py);
    }
    if (ha == 0 || hb == 0) return a == b ? 1.0 : 0.0;
    return mi / std::sqrt(ha * hb);
}

// Neighbors by fully sorting every similarity row.
inline std::vector<std::uint32_t> full_sort_knn(const sic::EmbeddingMatrix& m, std::size_t k) {
    const std::size_t n = m.rows(), d = m.cols();
    std::vector<std::uint32_t> out;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::pair<double, std::uint32_t>> row;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            double s = 0;
            for (std::size_t t = 0; t < d; ++t) s += static_cast<double>(m.at(i, t)) * m.at(j, t);
            row.emplace_back(-s, static_cast<std::uint32_t>(j));
        }
        std::sort(row.begin(), row.end());
        for (std::size_t r = 0; r < k; ++r) out.push_back(row[r].second);
    }
    return out;
}

// Minimum within-cluster sum of squares over all c^n labelings (tiny n).
inline double exhaustive_kmeans_inertia(const std::vector<std::vector<double>>& pts, std::size_t c) {
    const std::size_t n = pts.size(), d = pts[0].size();
    std::vector<std::size_t> lab(n, 0);
    double best = std::numeric_limits<double>::infinity();
    while (true) {
        std::vector<std::vector<double>> sum(c, std::vector<double>(d, 0.0));
        std::vector<double> cnt(c, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            cnt[lab[i]] += 1;
            for (std::size_t t = 0; t < d; ++t) sum[lab[i]][t] += pts[i][t];
        }
        bool all_used = true;
        for (double x : cnt) all_used = all_used && x > 0;
        if (all_used) {
            double inertia = 0;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t t = 0; t < d; ++t) {
                    const double diff = pts[i][t] - sum[lab[i]][t] / cnt[lab[i]];
                    inertia += diff * diff;
                }
            best = std::min(best, inertia);
        }
        std::size_t p = 0;
        while (p < n && ++lab[p] == c) lab[p++] = 0;
        if (p == n) break;
    }
    return best;
}

// Objective written straight from its definition, no shared helpers.
inline double objective(const sic::ClusterHeadParams& p, const sic::EmbeddingMatrix& images,
                        const std::vector<std::size_t>& batch, const std::vector<std::uint32_t>& pairing,
                        const std::vector<std::uint32_t>* pseudo, double lambda, double beta, double sign) {
    const std::size_t c = p.clusters, d = p.dim, m = batch.size();
    auto probs = [&](std::size_t i) {
        std::vector<double> z(c);
        for (std::size_t l = 0; l < c; ++l) {
            z[l] = p.bias[l];
            for (std::size_t t = 0; t < d; ++t) z[l] += p.weight[l * d + t] * images.at(i, t);
        }
        const double mx = *std::max_element(z.begin(), z.end());
        double s = 0;
        for (auto& v : z) s += (v = std::exp(v - mx));
        for (auto& v : z) v /= s;
        return z;
    };
    double li = 0, lis = 0;
    std::vector<double> qbar(c, 0.0);
    for (std::size_t b = 0; b < m; ++b) {
        const auto qi = probs(batch[b]);
        const auto qj = probs(pairing[b]);
        double dot = 0;
        for (std::size_t l = 0; l < c; ++l) dot += qi[l] * qj[l];
        li -= std::log(std::max(dot, sic::kDotFloor));
        if (pseudo) lis -= std::log(qi[(*pseudo)[batch[b]]]);
        for (std::size_t l = 0; l < c; ++l) qbar[l] += qi[l] / static_cast<double>(m);
    }
    double lb = 0;
    for (double v : qbar)
        if (v > 0) lb += v * std::log(v);
    return li / static_cast<double>(m) + beta * lis / static_cast<double>(m) + lambda * sign * lb;
}

struct GradCheck {
    double max_rel_err = 0.0;
};

// Central differences on every weight and bias entry.
inline GradCheck check_gradient(const sic::ClusterHeadParams& p, const sic::HeadGradient& g,
                                const std::function<double(const sic::ClusterHeadParams&)>& f, double h = 1e-5) {
    GradCheck out;
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1e-6, std::max(std::abs(a), std::abs(b))); };
    for (std::size_t i = 0; i < p.weight.size(); ++i) {
        auto hi = p, lo = p;
        hi.weight[i] += h;
        lo.weight[i] -= h;
        out.max_rel_err = std::max(out.max_rel_err, rel((f(hi) - f(lo)) / (2 * h), g.weight[i]));
    }
    for (std::size_t i = 0; i < p.bias.size(); ++i) {
        auto hi = p, lo = p;
        hi.bias[i] += h;
        lo.bias[i] -= h;
        out.max_rel_err = std::max(out.max_rel_err, rel((f(hi) - f(lo)) / (2 * h), g.bias[i]));
    }
    return out;
}

inline sic::EmbeddingMatrix random_unit_matrix(std::size_t n, std::size_t d, sic::Rng& rng) {
    std::vector<double> v(n * d);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0;
        for (std::size_t t = 0; t < d; ++t) s += std::pow(v[i * d + t] = rng.normal(), 2);
        s = std::sqrt(s);
        for (std::size_t t = 0; t < d; ++t) v[i * d + t] /= s;
    }
    return sic::EmbeddingMatrix::from_doubles(n, d, v, true);
}

// Blobs on the sphere around random directions, for tests that need structure.
inline sic::EmbeddingMatrix random_blobs(std::size_t n, std::size_t d, std::size_t c, double sigma, sic::Rng& rng) {
    auto centers = random_unit_matrix(c, d, rng);
    std::vector<double> v(n * d);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0;
        for (std::size_t t = 0; t < d; ++t)
            s += std::pow(v[i * d + t] = centers.at(i % c, t) + sigma * rng.normal(), 2);
        s = std::sqrt(s);
        for (std::size_t t = 0; t < d; ++t) v[i * d + t] /= s;
    }
    return sic::EmbeddingMatrix::from_doubles(n, d, v, true);
}

inline std::filesystem::path temp_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("sic_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace oracle
