#pragma once

// Linear + softmax cluster head: q_i = softmax(W u_i + b).
//
// Training objective on a minibatch B of size m:
//
//   L   = L_I + beta * L_IS + lambda * L_B
//   L_I = -(1/m) sum_{i in B} log max(q_i . q_j(i), eps_dot)   j(i) drawn from kNN(i)
//   L_IS = -(1/m) sum_{i in B} log q_{i, p_i}                   p_i = pseudo-label
//   L_B = sign * sum_l qbar_l log qbar_l                       qbar = batch mean of q
//
// sign = +1 (negative entropy; minimizing it spreads mass over clusters).
// sign = -1 reproduces the entropy-as-printed ablation.

#include "sic/corealg.hpp"
#include "sic/embedstore.hpp"
#include "sic/pseudolab.hpp"
#include "sic/random.hpp"
#include "sic/semspace.hpp"
#include "sic/soft_assignment.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sic {

inline constexpr double kDotFloor = 1e-12;

struct ClusterHeadParams {
    std::size_t clusters = 0;
    std::size_t dim = 0;
    std::vector<double> weight;  // clusters x dim
    std::vector<double> bias;    // clusters
    double tau = 1.0;

    /// Throws DataError on shape mismatch or non-finite values.
    void validate() const;
    friend bool operator==(const ClusterHeadParams&, const ClusterHeadParams&) = default;
};

/// k-meansNet initialization: W = 2 tau R, b_l = -tau ||r_l||^2 from the
/// k-means centers R of the images. The k-means result is returned too.
ClusterHeadParams init_kmeansnet(const EmbeddingMatrix& images, std::size_t c, double tau,
                                 const KMeansOptions& kmeans_opts, KMeansResult* kmeans_out = nullptr);

/// Same, from given centers.
ClusterHeadParams head_from_centers(const EmbeddingMatrix& centers, double tau);

/// Raw logits W u_i + b, n x c.
std::vector<double> logits(const ClusterHeadParams& params, const EmbeddingMatrix& images);

SoftAssignment forward(const ClusterHeadParams& params, const EmbeddingMatrix& images);

/// Row argmax of the logits (identical to the argmax of forward()), ties to
/// the lower index.
LabelVector predict(const ClusterHeadParams& params, const EmbeddingMatrix& images);

struct ImageConsistency {
    double loss = 0.0;
    std::vector<std::uint32_t> pairing;  // sampled neighbor per row
};

/// Draws one neighbor per row uniformly from its kNN list.
std::vector<std::uint32_t> sample_neighbors(const NeighborGraph& g, std::span<const std::size_t> rows, Rng& rng);

ImageConsistency loss_image_consistency(const SoftAssignment& q, const NeighborGraph& neighbors, Rng& rng);
double loss_image_semantic(const SoftAssignment& q, const PseudoLabelSet& p);
double loss_balance(const SoftAssignment& q, double sign = 1.0);

struct LossBreakdown {
    double total = 0.0;
    double image = 0.0;           // L_I
    double image_semantic = 0.0;  // L_IS (unweighted)
    double balance = 0.0;         // L_B (unweighted, sign applied)
};

struct HeadGradient {
    std::vector<double> weight;
    std::vector<double> bias;
    double norm() const;
};

struct ObjectiveWeights {
    double lambda = 5.0;
    double beta = 1.0;
    double balance_sign = 1.0;
};

/// Loss on the batch with a fixed neighbor pairing (pairing[b] is the
/// neighbor of batch[b]). Fills `grad` when non-null. `pseudo` may be null
/// only when beta == 0.
LossBreakdown batch_objective(const ClusterHeadParams& params, const EmbeddingMatrix& images,
                              std::span<const std::size_t> batch, std::span<const std::uint32_t> pairing,
                              const PseudoLabelSet* pseudo, const ObjectiveWeights& w, HeadGradient* grad);

struct BatchEvaluation {
    LossBreakdown loss;
    HeadGradient grad;
    std::vector<std::uint32_t> pairing;
};

/// Samples the neighbor pairing from `rng`, then evaluates the loss and its
/// analytic gradient.
BatchEvaluation total_loss_and_grad(const ClusterHeadParams& params, std::span<const std::size_t> batch,
                                    const EmbeddingMatrix& images, const NeighborGraph& neighbors,
                                    const PseudoLabelSet* pseudo, const ObjectiveWeights& w, Rng& rng);

struct AdamOptions {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct TrainConfig {
    std::size_t clusters = 0;
    std::size_t epochs = 100;
    std::size_t batch_size = 128;
    double learning_rate = 1e-4;
    double lambda = 5.0;
    double beta = 1.0;
    std::size_t neighbors = 20;
    Strategy strategy = Strategy::AdjustedCenterBased;
    std::size_t xi_c = 0;  // 0 selects floor(0.9 n / c)
    std::size_t xi_a = 20;
    bool renormalize_adjusted = false;
    double tau = 1.0;
    double balance_sign = 1.0;
    std::uint64_t seed = 0;
    AdamOptions adam;
    std::size_t kmeans_restarts = 10;
    std::size_t kmeans_max_iter = 300;
    double kmeans_tol = 1e-6;

    /// Throws ConfigError.
    void validate() const;
    std::size_t effective_xi_c(std::size_t n) const;
    KMeansOptions kmeans_options(std::uint64_t stream) const;
};

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double total = 0.0;
    double image = 0.0;
    double image_semantic = 0.0;
    double balance = 0.0;
    double grad_norm = 0.0;  // mean minibatch gradient norm
    std::optional<double> pseudo_label_accuracy;
    double wall_seconds = 0.0;

    /// Equality on every field except wall time.
    bool same_values(const EpochRecord& o) const;
};

struct TrainTrace {
    std::vector<EpochRecord> epochs;
    bool same_values(const TrainTrace& o) const;
};

struct TrainResult {
    ClusterHeadParams params;
    TrainTrace trace;
    PseudoLabelSet last_pseudo_labels;
    std::vector<std::string> warnings;
};

/// Full training loop: k-meansNet init, then per epoch a full forward pass,
/// regeneration of the semantic centers and pseudo-labels, and a shuffled
/// minibatch sweep of Adam steps.
TrainResult train(const EmbeddingMatrix& images, const SemanticSpace& space, const TrainConfig& cfg,
                  const LabelVector* truth = nullptr);

/// Semantic centers for the given strategy and current assignment.
SemanticCenters semantic_centers(const EmbeddingMatrix& images, const SoftAssignment& q, const SemanticSpace& space,
                                 const TrainConfig& cfg);

/// `<base>.emb` holds W (float32), `<base>.json` holds {b, tau_m, c, d, epoch}.
void write_checkpoint(const ClusterHeadParams& params, std::size_t epoch, const std::filesystem::path& emb_path);
ClusterHeadParams read_checkpoint(const std::filesystem::path& emb_path, std::size_t* epoch = nullptr);

/// W rounded to float, as stored in a checkpoint.
ClusterHeadParams checkpoint_precision(const ClusterHeadParams& params);

/// CSV with columns epoch,loss,L_I,L_IS,L_B,grad_norm,pl_acc.
std::string trace_to_csv(const TrainTrace& trace);
TrainTrace trace_from_csv(const std::string& csv);

}  // namespace sic
