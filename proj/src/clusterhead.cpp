#include "sic/clusterhead.hpp"

#include "sic/errors.hpp"
#include "sic/metrics.hpp"
#include "sic/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace sic {

namespace {

void row_logits(const ClusterHeadParams& p, std::span<const float> u, std::span<double> out) {
    for (std::size_t l = 0; l < p.clusters; ++l) {
        const double* w = p.weight.data() + l * p.dim;
        double s = 0.0;
        for (std::size_t j = 0; j < p.dim; ++j) s += w[j] * static_cast<double>(u[j]);
        out[l] = s + p.bias[l];
    }
}

double log_sum_exp(std::span<const double> z) {
    const double mx = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (double v : z) s += std::exp(v - mx);
    return mx + std::log(s);
}

// dz = q * (g - q.g): the softmax Jacobian applied to an upstream gradient.
void softmax_backward(std::span<const double> q, std::span<const double> g, std::span<double> dz) {
    double qg = 0.0;
    for (std::size_t l = 0; l < q.size(); ++l) qg += q[l] * g[l];
    for (std::size_t l = 0; l < q.size(); ++l) dz[l] += q[l] * (g[l] - qg);
}

void accumulate(HeadGradient& grad, std::span<const double> dz, std::span<const float> u) {
    const std::size_t d = u.size();
    for (std::size_t l = 0; l < dz.size(); ++l) {
        if (dz[l] == 0.0) continue;
        double* w = grad.weight.data() + l * d;
        for (std::size_t j = 0; j < d; ++j) w[j] += dz[l] * static_cast<double>(u[j]);
        grad.bias[l] += dz[l];
    }
}

std::string fmt_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void check_dims(const ClusterHeadParams& p, const EmbeddingMatrix& images) {
    if (images.cols() != p.dim)
        throw DimensionMismatch("head expects d = " + std::to_string(p.dim) + ", images have d = " +
                                std::to_string(images.cols()));
}

}  // namespace

void ClusterHeadParams::validate() const {
    if (clusters == 0 || dim == 0) throw DataError("cluster head needs c >= 1 and d >= 1");
    if (weight.size() != clusters * dim || bias.size() != clusters) throw DataError("cluster head shape mismatch");
    if (!(tau > 0.0) || !std::isfinite(tau)) throw DataError("cluster head temperature must be positive and finite");
    for (double v : weight)
        if (!std::isfinite(v)) throw DataError("non-finite cluster head weight");
    for (double v : bias)
        if (!std::isfinite(v)) throw DataError("non-finite cluster head bias");
}

ClusterHeadParams head_from_centers(const EmbeddingMatrix& centers, double tau) {
    if (!(tau > 0.0)) throw ConfigError("tau_m must be positive");
    ClusterHeadParams p{centers.rows(), centers.cols(), std::vector<double>(centers.rows() * centers.cols()),
                        std::vector<double>(centers.rows()), tau};
    for (std::size_t l = 0; l < p.clusters; ++l) {
        auto r = centers.row(l);
        double sq = 0.0;
        for (std::size_t j = 0; j < p.dim; ++j) {
            p.weight[l * p.dim + j] = 2.0 * tau * static_cast<double>(r[j]);
            sq += static_cast<double>(r[j]) * r[j];
        }
        p.bias[l] = -tau * sq;
    }
    return p;
}

ClusterHeadParams init_kmeansnet(const EmbeddingMatrix& images, std::size_t c, double tau,
                                 const KMeansOptions& kmeans_opts, KMeansResult* kmeans_out) {
    if (!(tau > 0.0)) throw ConfigError("tau_m must be positive");
    auto opts = kmeans_opts;
    opts.clusters = c;
    auto km = kmeans(images, opts);
    auto p = head_from_centers(km.centers, tau);
    if (kmeans_out) *kmeans_out = std::move(km);
    return p;
}

std::vector<double> logits(const ClusterHeadParams& params, const EmbeddingMatrix& images) {
    check_dims(params, images);
    const std::size_t c = params.clusters;
    std::vector<double> z(images.rows() * c);
    parallel_for(images.rows(), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) row_logits(params, images.row(i), {z.data() + i * c, c});
    });
    return z;
}

SoftAssignment forward(const ClusterHeadParams& params, const EmbeddingMatrix& images) {
    auto z = logits(params, images);
    const std::size_t c = params.clusters;
    std::vector<double> q(z.size());
    for (std::size_t i = 0; i < images.rows(); ++i) softmax({z.data() + i * c, c}, {q.data() + i * c, c});
    return SoftAssignment(images.rows(), c, std::move(q));
}

LabelVector predict(const ClusterHeadParams& params, const EmbeddingMatrix& images) {
    const auto z = logits(params, images);
    const std::size_t c = params.clusters;
    std::vector<std::uint32_t> labels(images.rows());
    for (std::size_t i = 0; i < images.rows(); ++i) {
        const double* r = z.data() + i * c;
        labels[i] = static_cast<std::uint32_t>(std::max_element(r, r + c) - r);
    }
    return LabelVector(std::move(labels), static_cast<std::uint32_t>(c));
}

std::vector<std::uint32_t> sample_neighbors(const NeighborGraph& g, std::span<const std::size_t> rows, Rng& rng) {
    std::vector<std::uint32_t> out(rows.size());
    for (std::size_t b = 0; b < rows.size(); ++b) out[b] = g.neighbors(rows[b])[rng.index(g.k)];
    return out;
}

ImageConsistency loss_image_consistency(const SoftAssignment& q, const NeighborGraph& neighbors, Rng& rng) {
    if (q.rows() != neighbors.n)
        throw SizeMismatch("assignment has " + std::to_string(q.rows()) + " rows, graph has " +
                           std::to_string(neighbors.n));
    std::vector<std::size_t> rows(q.rows());
    std::iota(rows.begin(), rows.end(), 0);
    ImageConsistency out{0.0, sample_neighbors(neighbors, rows, rng)};
    for (std::size_t i = 0; i < q.rows(); ++i) {
        auto qi = q.row(i), qj = q.row(out.pairing[i]);
        const double s = std::inner_product(qi.begin(), qi.end(), qj.begin(), 0.0);
        out.loss -= std::log(std::max(s, kDotFloor));
    }
    out.loss /= static_cast<double>(q.rows());
    return out;
}

double loss_image_semantic(const SoftAssignment& q, const PseudoLabelSet& p) {
    if (q.rows() != p.size() || q.clusters() != p.clusters)
        throw SizeMismatch("pseudo-labels do not match the assignment shape");
    double s = 0.0;
    for (std::size_t i = 0; i < q.rows(); ++i) s -= std::log(q.at(i, p.labels[i]));
    return s / static_cast<double>(q.rows());
}

double loss_balance(const SoftAssignment& q, double sign) {
    std::vector<double> mean(q.clusters(), 0.0);
    for (std::size_t i = 0; i < q.rows(); ++i)
        for (std::size_t l = 0; l < q.clusters(); ++l) mean[l] += q.at(i, l);
    double s = 0.0;
    for (double m : mean) {
        const double v = m / static_cast<double>(q.rows());
        if (v > 0.0) s += v * std::log(v);
    }
    return sign * s;
}

double HeadGradient::norm() const {
    double s = 0.0;
    for (double v : weight) s += v * v;
    for (double v : bias) s += v * v;
    return std::sqrt(s);
}

LossBreakdown batch_objective(const ClusterHeadParams& params, const EmbeddingMatrix& images,
                              std::span<const std::size_t> batch, std::span<const std::uint32_t> pairing,
                              const PseudoLabelSet* pseudo, const ObjectiveWeights& w, HeadGradient* grad) {
    check_dims(params, images);
    if (batch.empty()) throw ConfigError("empty minibatch");
    if (pairing.size() != batch.size()) throw SizeMismatch("neighbor pairing does not match the batch");
    if (w.beta != 0.0 && pseudo == nullptr) throw ConfigError("pseudo-labels required when beta > 0");
    if (pseudo && (pseudo->size() != images.rows() || pseudo->clusters != params.clusters))
        throw SizeMismatch("pseudo-labels do not match images or cluster count");

    const std::size_t c = params.clusters, m = batch.size();
    const double inv_m = 1.0 / static_cast<double>(m);
    if (grad) {
        grad->weight.assign(params.weight.size(), 0.0);
        grad->bias.assign(c, 0.0);
    }

    // Probabilities of the batch rows (kept for the balance term).
    std::vector<double> zb(m * c), qb(m * c), lse(m);
    for (std::size_t b = 0; b < m; ++b) {
        std::span<double> z{zb.data() + b * c, c};
        row_logits(params, images.row(batch[b]), z);
        softmax(z, {qb.data() + b * c, c});
        lse[b] = log_sum_exp(z);
    }

    LossBreakdown out;
    std::vector<double> zj(c), qj(c), g(c), dz(c);
    for (std::size_t b = 0; b < m; ++b) {
        const std::span<const double> qi{qb.data() + b * c, c};
        const auto i = batch[b];
        const auto j = pairing[b];
        row_logits(params, images.row(j), zj);
        softmax(zj, qj);
        const double s = std::inner_product(qi.begin(), qi.end(), qj.begin(), 0.0);
        out.image -= std::log(std::max(s, kDotFloor)) * inv_m;
        if (grad && s > kDotFloor) {
            // d/dq_i = -q_j / (m s), d/dq_j = -q_i / (m s)
            for (std::size_t l = 0; l < c; ++l) g[l] = -qj[l] * inv_m / s;
            std::fill(dz.begin(), dz.end(), 0.0);
            softmax_backward(qi, g, dz);
            accumulate(*grad, dz, images.row(i));

            for (std::size_t l = 0; l < c; ++l) g[l] = -qi[l] * inv_m / s;
            std::fill(dz.begin(), dz.end(), 0.0);
            softmax_backward(qj, g, dz);
            accumulate(*grad, dz, images.row(j));
        }
        if (pseudo) {
            const auto target = pseudo->labels[i];
            out.image_semantic -= (zb[b * c + target] - lse[b]) * inv_m;
            if (grad && w.beta != 0.0) {
                for (std::size_t l = 0; l < c; ++l) dz[l] = w.beta * inv_m * (qi[l] - (l == target ? 1.0 : 0.0));
                accumulate(*grad, dz, images.row(i));
            }
        }
    }

    std::vector<double> mean(c, 0.0);
    for (std::size_t b = 0; b < m; ++b)
        for (std::size_t l = 0; l < c; ++l) mean[l] += qb[b * c + l] * inv_m;
    for (double v : mean)
        if (v > 0.0) out.balance += w.balance_sign * v * std::log(v);
    if (grad && w.lambda != 0.0) {
        // dL_B/dq_il = sign (log qbar_l + 1) / m for every batch row.
        for (std::size_t l = 0; l < c; ++l)
            g[l] = w.lambda * w.balance_sign * inv_m * (std::log(std::max(mean[l], 1e-300)) + 1.0);
        for (std::size_t b = 0; b < m; ++b) {
            std::fill(dz.begin(), dz.end(), 0.0);
            softmax_backward({qb.data() + b * c, c}, g, dz);
            accumulate(*grad, dz, images.row(batch[b]));
        }
    }

    out.total = out.image + w.beta * out.image_semantic + w.lambda * out.balance;
    return out;
}

BatchEvaluation total_loss_and_grad(const ClusterHeadParams& params, std::span<const std::size_t> batch,
                                    const EmbeddingMatrix& images, const NeighborGraph& neighbors,
                                    const PseudoLabelSet* pseudo, const ObjectiveWeights& w, Rng& rng) {
    if (neighbors.n != images.rows()) throw SizeMismatch("neighbor graph does not match the images");
    BatchEvaluation ev;
    ev.pairing = sample_neighbors(neighbors, batch, rng);
    ev.loss = batch_objective(params, images, batch, ev.pairing, pseudo, w, &ev.grad);
    return ev;
}

void TrainConfig::validate() const {
    if (clusters == 0) throw ConfigError("cluster count c must be >= 1");
    if (epochs == 0) throw ConfigError("epochs must be >= 1");
    if (batch_size < 2) throw ConfigError("batch_size must be >= 2");
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
    if (!(beta >= 0.0)) throw ConfigError("beta must be >= 0");
    if (neighbors == 0) throw ConfigError("k must be >= 1");
    if (xi_a == 0) throw ConfigError("xi_a must be >= 1");
    if (!(tau > 0.0)) throw ConfigError("tau_m must be positive");
    if (balance_sign != 1.0 && balance_sign != -1.0) throw ConfigError("balance sign must be +1 or -1");
}

std::size_t TrainConfig::effective_xi_c(std::size_t n) const {
    if (xi_c != 0) return xi_c;
    const auto v = static_cast<std::size_t>(std::floor(0.9 * static_cast<double>(n) / static_cast<double>(clusters)));
    return std::max<std::size_t>(1, v);
}

KMeansOptions TrainConfig::kmeans_options(std::uint64_t stream) const {
    return KMeansOptions{clusters, derive_seed(seed, stream), kmeans_max_iter, kmeans_tol, kmeans_restarts};
}

bool EpochRecord::same_values(const EpochRecord& o) const {
    return epoch == o.epoch && total == o.total && image == o.image && image_semantic == o.image_semantic &&
           balance == o.balance && grad_norm == o.grad_norm && pseudo_label_accuracy == o.pseudo_label_accuracy;
}

bool TrainTrace::same_values(const TrainTrace& o) const {
    return epochs.size() == o.epochs.size() &&
           std::equal(epochs.begin(), epochs.end(), o.epochs.begin(),
                      [](const EpochRecord& a, const EpochRecord& b) { return a.same_values(b); });
}

SemanticCenters semantic_centers(const EmbeddingMatrix& images, const SoftAssignment& q, const SemanticSpace& space,
                                 const TrainConfig& cfg) {
    const auto& sem = space.lexicon.embeddings();
    switch (cfg.strategy) {
        case Strategy::Direct: return centers_direct(images, sem, cfg.clusters, cfg.kmeans_options(2));
        case Strategy::CenterBased:
        case Strategy::AdjustedCenterBased: {
            const auto sel = select_top(q, cfg.effective_xi_c(images.rows()));
            auto h = centers_from_selection(images, sel, space.lexicon);
            if (cfg.strategy == Strategy::CenterBased) return h;
            return adjust_centers(h, sem, cfg.xi_a, cfg.renormalize_adjusted);
        }
    }
    throw ConfigError("unknown strategy");
}

TrainResult train(const EmbeddingMatrix& images, const SemanticSpace& space, const TrainConfig& cfg,
                  const LabelVector* truth) {
    cfg.validate();
    const std::size_t n = images.rows();
    if (cfg.clusters > n) throw ConfigError("more clusters than images");
    if (cfg.neighbors + 1 > n) throw ConfigError("k = " + std::to_string(cfg.neighbors) + " needs at least k+1 images");
    if (space.lexicon.embeddings().cols() != images.cols())
        throw DimensionMismatch("semantic space and images differ in dimensionality");
    if (cfg.strategy != Strategy::Direct && space.lexicon.size() < cfg.clusters)
        throw ConfigError("center-based strategies need at least c = " + std::to_string(cfg.clusters) +
                          " semantics, have " + std::to_string(space.lexicon.size()));
    if (cfg.strategy == Strategy::AdjustedCenterBased && cfg.xi_a > space.lexicon.size())
        throw ConfigError("xi_a = " + std::to_string(cfg.xi_a) + " exceeds the " +
                          std::to_string(space.lexicon.size()) + " available semantics");
    if (truth && truth->size() != n) throw SizeMismatch("truth labels do not match the images");

    TrainResult result;
    result.params = init_kmeansnet(images, cfg.clusters, cfg.tau, cfg.kmeans_options(1));
    const auto graph = knn_graph(images, cfg.neighbors);
    Rng rng(derive_seed(cfg.seed, 3));
    const ObjectiveWeights weights{cfg.lambda, cfg.beta, cfg.balance_sign};

    std::vector<double> adam_m(result.params.weight.size() + cfg.clusters, 0.0), adam_v(adam_m.size(), 0.0);
    std::size_t step = 0;
    std::optional<SemanticCenters> direct_cache;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto q = forward(result.params, images);

        SemanticCenters h = [&] {
            if (cfg.strategy != Strategy::Direct) return semantic_centers(images, q, space, cfg);
            // Direct mapping ignores Q, so it is computed once.
            if (!direct_cache) direct_cache = semantic_centers(images, q, space, cfg);
            return *direct_cache;
        }();
        for (auto& w : h.warnings)
            if (std::find(result.warnings.begin(), result.warnings.end(), w) == result.warnings.end())
                result.warnings.push_back(w);
        auto pseudo = assign_pseudo_labels(images, h);
        pseudo.epoch = epoch;

        EpochRecord rec;
        rec.epoch = epoch + 1;
        if (truth) rec.pseudo_label_accuracy = pseudo_label_accuracy(pseudo, *truth);

        shuffle(order, rng);
        std::size_t batches = 0;
        for (std::size_t start = 0; start < n;) {
            std::size_t end = std::min(n, start + cfg.batch_size);
            if (n - end == 1) end = n;  // never leave a single-row batch behind
            const std::span<const std::size_t> batch{order.data() + start, end - start};
            auto ev = total_loss_and_grad(result.params, batch, images, graph, &pseudo, weights, rng);

            ++step;
            const double bc1 = 1.0 - std::pow(cfg.adam.beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(cfg.adam.beta2, static_cast<double>(step));
            auto update = [&](double& param, double g, std::size_t slot) {
                adam_m[slot] = cfg.adam.beta1 * adam_m[slot] + (1.0 - cfg.adam.beta1) * g;
                adam_v[slot] = cfg.adam.beta2 * adam_v[slot] + (1.0 - cfg.adam.beta2) * g * g;
                param -= cfg.learning_rate * (adam_m[slot] / bc1) / (std::sqrt(adam_v[slot] / bc2) + cfg.adam.eps);
            };
            const std::size_t nw = result.params.weight.size();
            for (std::size_t s = 0; s < nw; ++s) update(result.params.weight[s], ev.grad.weight[s], s);
            for (std::size_t l = 0; l < cfg.clusters; ++l) update(result.params.bias[l], ev.grad.bias[l], nw + l);

            rec.total += ev.loss.total;
            rec.image += ev.loss.image;
            rec.image_semantic += ev.loss.image_semantic;
            rec.balance += ev.loss.balance;
            rec.grad_norm += ev.grad.norm();
            ++batches;
            start = end;
        }
        const double inv = 1.0 / static_cast<double>(batches);
        rec.total *= inv;
        rec.image *= inv;
        rec.image_semantic *= inv;
        rec.balance *= inv;
        rec.grad_norm *= inv;
        rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.trace.epochs.push_back(rec);
        result.last_pseudo_labels = std::move(pseudo);
    }
    result.params.validate();
    return result;
}

ClusterHeadParams checkpoint_precision(const ClusterHeadParams& params) {
    auto p = params;
    for (auto& v : p.weight) v = static_cast<double>(static_cast<float>(v));
    return p;
}

void write_checkpoint(const ClusterHeadParams& params, std::size_t epoch, const std::filesystem::path& emb_path) {
    params.validate();
    write_embeddings(EmbeddingMatrix::from_doubles(params.clusters, params.dim, params.weight), emb_path);
    nlohmann::ordered_json j;
    j["b"] = params.bias;
    j["tau_m"] = params.tau;
    j["c"] = params.clusters;
    j["d"] = params.dim;
    j["epoch"] = epoch;
    auto side = emb_path;
    side.replace_extension(".json");
    write_text_file(side, j.dump(2) + "\n");
}

ClusterHeadParams read_checkpoint(const std::filesystem::path& emb_path, std::size_t* epoch) {
    const auto w = read_embeddings(emb_path);
    auto side = emb_path;
    side.replace_extension(".json");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(side));
        ClusterHeadParams p;
        p.clusters = j.at("c").get<std::size_t>();
        p.dim = j.at("d").get<std::size_t>();
        p.bias = j.at("b").get<std::vector<double>>();
        p.tau = j.at("tau_m").get<double>();
        if (epoch) *epoch = j.value("epoch", std::size_t{0});
        if (w.rows() != p.clusters || w.cols() != p.dim)
            throw FormatError("checkpoint weight shape does not match its sidecar");
        p.weight.assign(w.data().begin(), w.data().end());
        p.validate();
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("checkpoint sidecar '" + side.string() + "': " + e.what());
    }
}

std::string trace_to_csv(const TrainTrace& trace) {
    std::string out = "epoch,loss,L_I,L_IS,L_B,grad_norm,pl_acc\n";
    for (const auto& r : trace.epochs) {
        out += std::to_string(r.epoch) + "," + fmt_double(r.total) + "," + fmt_double(r.image) + "," +
               fmt_double(r.image_semantic) + "," + fmt_double(r.balance) + "," + fmt_double(r.grad_norm) + "," +
               (r.pseudo_label_accuracy ? fmt_double(*r.pseudo_label_accuracy) : std::string("nan")) + "\n";
    }
    return out;
}

TrainTrace trace_from_csv(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line) || line.rfind("epoch,", 0) != 0) throw FormatError("trace CSV lacks its header row");
    TrainTrace trace;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (cells.size() != 7) throw FormatError("trace CSV line " + std::to_string(lineno) + " has " +
                                                 std::to_string(cells.size()) + " columns, expected 7");
        try {
            EpochRecord r;
            r.epoch = std::stoul(cells[0]);
            r.total = std::stod(cells[1]);
            r.image = std::stod(cells[2]);
            r.image_semantic = std::stod(cells[3]);
            r.balance = std::stod(cells[4]);
            r.grad_norm = std::stod(cells[5]);
            if (cells[6] != "nan" && !cells[6].empty()) r.pseudo_label_accuracy = std::stod(cells[6]);
            trace.epochs.push_back(r);
        } catch (const std::exception&) {
            throw FormatError("trace CSV line " + std::to_string(lineno) + " is not numeric");
        }
    }
    return trace;
}

}  // namespace sic
