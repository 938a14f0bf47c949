#pragma once

// Empirical constants of the generalization bound
//
//   risk <= empirical risk + c1 / sqrt(n) + c2 * sqrt(log(1/delta) / (2n))
//   c1 = 2/mu_n + 2 C beta + 2 c lambda log(1/mu_p)
//   c2 = (2 + 2k') log(1/mu_n) + C beta + 2 c lambda log(1/mu_p)
//
// and a convergence diagnostic over a training trace.

#include "sic/clusterhead.hpp"
#include "sic/corealg.hpp"
#include "sic/soft_assignment.hpp"

#include <string>
#include <vector>

namespace sic {

inline constexpr double kMuFloor = 1e-12;

struct BoundConstants {
    double c1 = 0.0;
    double c2 = 0.0;
};

/// Closed-form constants. mu_n and mu_p must lie in (0, 1].
BoundConstants bound_constants(double mu_n, double mu_p, std::size_t k_prime, double lambda, double beta,
                               std::size_t c, double C);

/// c1 / sqrt(n) + c2 * sqrt(log(1/delta) / (2n)).
double bound_gap(const BoundConstants& k, std::size_t n, double delta);

struct BoundReport {
    double mu_n = 0.0;         // min over (i, j in kNN(i)) of q_i . q_j, floored at kMuFloor
    double mu_n_raw = 0.0;     // before flooring
    bool vacuous = false;      // true when the floor was applied
    double mu_p = 0.0;         // min_i max_l q_il (confidence floor)
    double mu_p_max = 0.0;     // max_i max_l q_il
    std::size_t k_prime = 0;   // max in-degree of the kNN graph
    double c1 = 0.0;
    double c2 = 0.0;
    double bound_gap = 0.0;
    double delta = 0.05;
    double C = 1.0;
    double lambda = 0.0;
    double beta = 0.0;
    std::size_t n = 0;
    std::size_t c = 0;
    std::size_t k = 0;
};

/// Throws ConfigError unless 0 < delta < 1, lambda, beta >= 0 and C > 0.
BoundReport bound_report(const SoftAssignment& q, const NeighborGraph& g, double lambda, double beta, std::size_t c,
                         double delta, double C);

std::string bound_report_to_json(const BoundReport& r);

struct ConvergenceSummary {
    std::vector<double> min_so_far;  // m_t = min_{s <= t} ||grad_s||
    double slope = 0.0;              // least-squares slope of log m_t against log t
    double intercept = 0.0;
    std::size_t epochs = 0;
};

/// Throws TooShort for fewer than two epochs.
ConvergenceSummary convergence_report(const TrainTrace& trace);
ConvergenceSummary convergence_report(const std::vector<double>& grad_norms);

std::string convergence_to_csv(const ConvergenceSummary& s, const std::vector<double>& grad_norms);
std::string convergence_to_json(const ConvergenceSummary& s);

}  // namespace sic
