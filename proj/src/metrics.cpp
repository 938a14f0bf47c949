#include "sic/metrics.hpp"

#include "sic/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace sic {

namespace {

void check_sizes(const LabelVector& pred, const LabelVector& truth) {
    if (pred.size() != truth.size())
        throw SizeMismatch("prediction has " + std::to_string(pred.size()) + " labels, truth has " +
                           std::to_string(truth.size()));
    if (pred.size() == 0) throw SizeMismatch("empty label vectors");
}

double entropy(const std::vector<double>& counts, double n) {
    double h = 0.0;
    for (double c : counts)
        if (c > 0) h -= (c / n) * std::log(c / n);
    return h;
}

double choose2(double x) { return x * (x - 1.0) / 2.0; }

// Two labelings describe the same partition iff the contingency table has
// exactly one non-zero cell per occupied row and per occupied column.
bool same_partition(const ContingencyTable& t) {
    std::vector<int> row_hits(t.pred_classes, 0), col_hits(t.true_classes, 0);
    for (std::size_t p = 0; p < t.pred_classes; ++p)
        for (std::size_t q = 0; q < t.true_classes; ++q)
            if (t.at(p, q) > 0) {
                ++row_hits[p];
                ++col_hits[q];
            }
    return std::all_of(row_hits.begin(), row_hits.end(), [](int h) { return h <= 1; }) &&
           std::all_of(col_hits.begin(), col_hits.end(), [](int h) { return h <= 1; });
}

}  // namespace

ContingencyTable contingency(const LabelVector& pred, const LabelVector& truth) {
    check_sizes(pred, truth);
    ContingencyTable t;
    t.pred_classes = std::max<std::size_t>(pred.num_classes, 1);
    t.true_classes = std::max<std::size_t>(truth.num_classes, 1);
    t.counts.assign(t.pred_classes * t.true_classes, 0);
    for (std::size_t i = 0; i < pred.size(); ++i) ++t.counts[pred.labels[i] * t.true_classes + truth.labels[i]];
    t.n = pred.size();
    return t;
}

std::vector<std::size_t> hungarian_max(const std::vector<double>& weights, std::size_t size) {
    // Shortest augmenting path (Jonker-Volgenant style) on cost = -weight,
    // with 1-based potentials u (rows) and v (columns).
    const double inf = std::numeric_limits<double>::infinity();
    const std::size_t n = size;
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
    auto cost = [&](std::size_t i, std::size_t j) { return -weights[(i - 1) * n + (j - 1)]; };
    for (std::size_t i = 1; i <= n; ++i) {
        match[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = match[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0, j) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::size_t> row_to_col(n);
    for (std::size_t j = 1; j <= n; ++j)
        if (match[j] != 0) row_to_col[match[j] - 1] = j - 1;
    return row_to_col;
}

double hungarian_accuracy(const LabelVector& pred, const LabelVector& truth) {
    const auto t = contingency(pred, truth);
    const std::size_t size = std::max(t.pred_classes, t.true_classes);
    std::vector<double> w(size * size, 0.0);
    for (std::size_t p = 0; p < t.pred_classes; ++p)
        for (std::size_t q = 0; q < t.true_classes; ++q) w[p * size + q] = static_cast<double>(t.at(p, q));
    const auto m = hungarian_max(w, size);
    double matched = 0.0;
    for (std::size_t p = 0; p < size; ++p) matched += w[p * size + m[p]];
    return matched / static_cast<double>(t.n);
}

double nmi(const LabelVector& pred, const LabelVector& truth) {
    const auto t = contingency(pred, truth);
    const double n = static_cast<double>(t.n);
    std::vector<double> a(t.pred_classes, 0.0), b(t.true_classes, 0.0);
    for (std::size_t p = 0; p < t.pred_classes; ++p)
        for (std::size_t q = 0; q < t.true_classes; ++q) {
            a[p] += static_cast<double>(t.at(p, q));
            b[q] += static_cast<double>(t.at(p, q));
        }
    const double ha = entropy(a, n), hb = entropy(b, n);
    if (ha == 0.0 || hb == 0.0) return same_partition(t) ? 1.0 : 0.0;
    double mi = 0.0;
    for (std::size_t p = 0; p < t.pred_classes; ++p)
        for (std::size_t q = 0; q < t.true_classes; ++q) {
            const double nij = static_cast<double>(t.at(p, q));
            if (nij > 0) mi += (nij / n) * std::log(n * nij / (a[p] * b[q]));
        }
    return std::clamp(mi / std::sqrt(ha * hb), 0.0, 1.0);
}

double ari(const LabelVector& pred, const LabelVector& truth) {
    const auto t = contingency(pred, truth);
    if (t.n < 2) throw SizeMismatch("ARI needs at least two samples");
    const double n = static_cast<double>(t.n);
    std::vector<double> a(t.pred_classes, 0.0), b(t.true_classes, 0.0);
    double index = 0.0;
    for (std::size_t p = 0; p < t.pred_classes; ++p)
        for (std::size_t q = 0; q < t.true_classes; ++q) {
            const double nij = static_cast<double>(t.at(p, q));
            a[p] += nij;
            b[q] += nij;
            index += choose2(nij);
        }
    double sa = 0.0, sb = 0.0;
    for (double x : a) sa += choose2(x);
    for (double x : b) sb += choose2(x);
    const double expected = sa * sb / choose2(n);
    const double max_index = 0.5 * (sa + sb);
    const double denom = max_index - expected;
    if (denom == 0.0) return same_partition(t) ? 1.0 : 0.0;
    return (index - expected) / denom;
}

ClusterMetrics evaluate(const LabelVector& pred, const LabelVector& truth) {
    return ClusterMetrics{hungarian_accuracy(pred, truth), nmi(pred, truth), pred.size() >= 2 ? ari(pred, truth) : 1.0,
                          pred.size(), pred.num_classes};
}

std::string metrics_to_json(const ClusterMetrics& m) {
    nlohmann::ordered_json j;
    j["acc"] = m.acc;
    j["nmi"] = m.nmi;
    j["ari"] = m.ari;
    j["n"] = m.n;
    j["c"] = m.c;
    return j.dump(2) + "\n";
}

}  // namespace sic
