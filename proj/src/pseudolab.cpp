#include "sic/pseudolab.hpp"

#include "sic/errors.hpp"
#include "sic/metrics.hpp"
#include "sic/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace sic {

std::string_view to_string(Strategy s) {
    switch (s) {
        case Strategy::Direct: return "direct";
        case Strategy::CenterBased: return "center";
        case Strategy::AdjustedCenterBased: return "adjusted";
    }
    return "unknown";
}

Strategy parse_strategy(std::string_view name) {
    if (name == "direct") return Strategy::Direct;
    if (name == "center") return Strategy::CenterBased;
    if (name == "adjusted") return Strategy::AdjustedCenterBased;
    throw ConfigError("unknown strategy '" + std::string(name) + "' (expected direct, center or adjusted)");
}

std::size_t SemanticCenters::duplicate_rows() const {
    std::size_t dup = 0;
    for (std::size_t a = 1; a < centers.rows(); ++a) {
        for (std::size_t b = 0; b < a; ++b) {
            auto ra = centers.row(a), rb = centers.row(b);
            if (std::equal(ra.begin(), ra.end(), rb.begin())) {
                ++dup;
                break;
            }
        }
    }
    return dup;
}

SemanticCenters centers_direct(const EmbeddingMatrix& images, const EmbeddingMatrix& semantics, std::size_t c,
                               const KMeansOptions& kmeans_opts) {
    if (images.cols() != semantics.cols())
        throw DimensionMismatch("images have d = " + std::to_string(images.cols()) + ", semantics d = " +
                                std::to_string(semantics.cols()));
    std::vector<std::size_t> nearest(images.rows());
    parallel_for(images.rows(), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) nearest[i] = nearest_row(images.row(i), semantics);
    });
    auto mapped = semantics.select_rows(nearest);

    auto opts = kmeans_opts;
    opts.clusters = c;
    auto km = kmeans(mapped, opts);
    SemanticCenters out{std::move(km.centers), Strategy::Direct, {}, {}};

    std::vector<std::size_t> distinct(nearest);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < c)
        out.warnings.push_back("direct mapping hit only " + std::to_string(distinct.size()) +
                               " distinct semantics for " + std::to_string(c) + " clusters");
    return out;
}

TopSelection select_top(const SoftAssignment& q, std::size_t budget) {
    const std::size_t n = q.rows(), c = q.clusters();
    if (budget == 0 || budget > n)
        throw BudgetTooLarge("selection budget " + std::to_string(budget) + " outside [1, " + std::to_string(n) + "]");
    TopSelection sel{n, c, std::vector<std::uint8_t>(n * c, 0), std::vector<double>(c, 0.0), budget};
    std::vector<std::size_t> idx(n);
    for (std::size_t l = 0; l < c; ++l) {
        std::iota(idx.begin(), idx.end(), 0);
        std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(budget), idx.end(),
                          [&](std::size_t a, std::size_t b) {
                              const double qa = q.at(a, l), qb = q.at(b, l);
                              return qa > qb || (qa == qb && a < b);
                          });
        for (std::size_t r = 0; r < budget; ++r) sel.z[idx[r] * c + l] = 1;
        sel.thresholds[l] = q.at(idx[budget - 1], l);
    }
    return sel;
}

SemanticCenters centers_from_selection(const EmbeddingMatrix& images, const TopSelection& sel,
                                       const NounLexicon& semantics) {
    if (sel.rows != images.rows())
        throw SizeMismatch("selection has " + std::to_string(sel.rows) + " rows, images have " +
                           std::to_string(images.rows()));
    const auto& sem = semantics.embeddings();
    if (sem.cols() != images.cols()) throw DimensionMismatch("semantic and image dimensionality differ");
    const std::size_t d = images.cols();
    std::vector<std::size_t> chosen(sel.clusters);
    std::vector<double> mean(d);
    for (std::size_t l = 0; l < sel.clusters; ++l) {
        std::fill(mean.begin(), mean.end(), 0.0);
        std::size_t count = 0;
        for (std::size_t i = 0; i < sel.rows; ++i) {
            if (!sel.selected(i, l)) continue;
            ++count;
            auto u = images.row(i);
            for (std::size_t j = 0; j < d; ++j) mean[j] += u[j];
        }
        if (count == 0) throw EmptyColumn("selection column " + std::to_string(l) + " is empty");
        for (auto& v : mean) v /= static_cast<double>(count);
        chosen[l] = nearest_row(std::span<const double>(mean), sem);
    }
    SemanticCenters out{sem.select_rows(chosen), Strategy::CenterBased, chosen, {}};
    if (const auto dup = out.duplicate_rows(); dup > 0)
        out.warnings.push_back(std::to_string(dup) + " clusters share a semantic center");
    return out;
}

SemanticCenters adjust_centers(const SemanticCenters& h, const EmbeddingMatrix& semantics, std::size_t xi_a,
                               bool renormalize) {
    if (xi_a == 0 || xi_a > semantics.rows())
        throw KTooLarge("xi_a = " + std::to_string(xi_a) + " with only " + std::to_string(semantics.rows()) +
                        " semantics");
    if (h.centers.cols() != semantics.cols()) throw DimensionMismatch("center and semantic dimensionality differ");
    const std::size_t c = h.centers.rows(), d = semantics.cols();
    std::vector<double> out(c * d, 0.0);
    for (std::size_t l = 0; l < c; ++l) {
        auto r = h.centers.row(l);
        const std::vector<double> center(r.begin(), r.end());
        double* dst = out.data() + l * d;
        for (std::size_t idx : top_k_rows(center, semantics, xi_a)) {
            auto s = semantics.row(idx);
            for (std::size_t j = 0; j < d; ++j) dst[j] += s[j];
        }
        for (std::size_t j = 0; j < d; ++j) dst[j] /= static_cast<double>(xi_a);
        if (renormalize) {
            double nrm = 0.0;
            for (std::size_t j = 0; j < d; ++j) nrm += dst[j] * dst[j];
            nrm = std::sqrt(nrm);
            if (nrm > 0.0)
                for (std::size_t j = 0; j < d; ++j) dst[j] /= nrm;
        }
    }
    return SemanticCenters{EmbeddingMatrix::from_doubles(c, d, out), Strategy::AdjustedCenterBased, h.noun_index,
                           h.warnings};
}

PseudoLabelSet assign_pseudo_labels(const EmbeddingMatrix& images, const SemanticCenters& h) {
    if (images.cols() != h.centers.cols())
        throw DimensionMismatch("images have d = " + std::to_string(images.cols()) + ", centers d = " +
                                std::to_string(h.centers.cols()));
    // softmax is strictly increasing, so the argmax of the raw dot products
    // equals the argmax of the softmax probabilities.
    PseudoLabelSet p{std::vector<std::uint32_t>(images.rows()), h.centers.rows(), h.strategy, 0};
    parallel_for(images.rows(), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i)
            p.labels[i] = static_cast<std::uint32_t>(nearest_row(images.row(i), h.centers));
    });
    return p;
}

double pseudo_label_accuracy(const PseudoLabelSet& p, const LabelVector& truth) {
    if (p.size() != truth.size())
        throw SizeMismatch("pseudo-labels have " + std::to_string(p.size()) + " entries, truth has " +
                           std::to_string(truth.size()));
    return hungarian_accuracy(LabelVector(p.labels, static_cast<std::uint32_t>(p.clusters)), truth);
}

std::string pseudo_labels_to_json(const PseudoLabelSet& p) {
    nlohmann::ordered_json j;
    j["strategy"] = std::string(to_string(p.strategy));
    j["epoch"] = p.epoch;
    j["clusters"] = p.clusters;
    j["labels"] = p.labels;
    return j.dump() + "\n";
}

}  // namespace sic
