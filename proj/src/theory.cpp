#include "sic/theory.hpp"

#include "sic/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

namespace sic {

BoundConstants bound_constants(double mu_n, double mu_p, std::size_t k_prime, double lambda, double beta,
                               std::size_t c, double C) {
    if (!(mu_n > 0.0 && mu_n <= 1.0) || !(mu_p > 0.0 && mu_p <= 1.0))
        throw ConfigError("mu_n and mu_p must lie in (0, 1]");
    const double conf = 2.0 * static_cast<double>(c) * lambda * std::log(1.0 / mu_p);
    BoundConstants k;
    k.c1 = 2.0 / mu_n + 2.0 * C * beta + conf;
    k.c2 = (2.0 + 2.0 * static_cast<double>(k_prime)) * std::log(1.0 / mu_n) + C * beta + conf;
    return k;
}

double bound_gap(const BoundConstants& k, std::size_t n, double delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
    if (n == 0) throw ConfigError("bound gap needs n >= 1");
    const double nn = static_cast<double>(n);
    return k.c1 / std::sqrt(nn) + k.c2 * std::sqrt(std::log(1.0 / delta) / (2.0 * nn));
}

BoundReport bound_report(const SoftAssignment& q, const NeighborGraph& g, double lambda, double beta, std::size_t c,
                         double delta, double C) {
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
    if (!(lambda >= 0.0) || !(beta >= 0.0)) throw ConfigError("lambda and beta must be >= 0");
    if (!(C > 0.0)) throw ConfigError("C must be positive");
    if (q.rows() != g.n) throw SizeMismatch("assignment and neighbor graph disagree on n");

    BoundReport r;
    r.mu_n_raw = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < g.n; ++i) {
        auto qi = q.row(i);
        for (auto j : g.neighbors(i)) {
            auto qj = q.row(j);
            r.mu_n_raw = std::min(r.mu_n_raw, std::inner_product(qi.begin(), qi.end(), qj.begin(), 0.0));
        }
    }
    if (g.k == 0) r.mu_n_raw = 1.0;
    r.vacuous = r.mu_n_raw < kMuFloor;
    r.mu_n = std::clamp(r.mu_n_raw, kMuFloor, 1.0);

    r.mu_p = 1.0;
    r.mu_p_max = 0.0;
    for (std::size_t i = 0; i < q.rows(); ++i) {
        auto qi = q.row(i);
        const double top = *std::max_element(qi.begin(), qi.end());
        r.mu_p = std::min(r.mu_p, top);
        r.mu_p_max = std::max(r.mu_p_max, top);
    }
    r.k_prime = max_in_degree(g);
    const auto k = bound_constants(r.mu_n, std::min(r.mu_p, 1.0), r.k_prime, lambda, beta, c, C);
    r.c1 = k.c1;
    r.c2 = k.c2;
    r.bound_gap = bound_gap(k, q.rows(), delta);
    r.delta = delta;
    r.C = C;
    r.lambda = lambda;
    r.beta = beta;
    r.n = q.rows();
    r.c = c;
    r.k = g.k;
    return r;
}

std::string bound_report_to_json(const BoundReport& r) {
    nlohmann::ordered_json j;
    j["mu_n"] = r.mu_n;
    j["mu_n_raw"] = r.mu_n_raw;
    j["vacuous"] = r.vacuous;
    j["mu_p"] = r.mu_p;
    j["mu_p_max"] = r.mu_p_max;
    j["k_prime"] = r.k_prime;
    j["c1"] = r.c1;
    j["c2"] = r.c2;
    j["bound_gap"] = r.bound_gap;
    j["delta"] = r.delta;
    j["C"] = r.C;
    j["lambda"] = r.lambda;
    j["beta"] = r.beta;
    j["n"] = r.n;
    j["c"] = r.c;
    j["k"] = r.k;
    return j.dump(2) + "\n";
}

ConvergenceSummary convergence_report(const std::vector<double>& grad_norms) {
    const std::size_t T = grad_norms.size();
    if (T < 2) throw TooShort("convergence report needs at least two epochs");
    ConvergenceSummary s;
    s.epochs = T;
    s.min_so_far.resize(T);
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < T; ++t) {
        m = std::min(m, grad_norms[t]);
        s.min_so_far[t] = m;
    }
    if (!(s.min_so_far.back() > 0.0)) throw TooShort("gradient norms must be positive to take logarithms");
    std::vector<double> x(T), y(T);
    for (std::size_t t = 0; t < T; ++t) {
        x[t] = std::log(static_cast<double>(t + 1));
        y[t] = std::log(s.min_so_far[t]);
    }
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(T);
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(T);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        sxy += (x[t] - mx) * (y[t] - my);
        sxx += (x[t] - mx) * (x[t] - mx);
    }
    s.slope = sxy / sxx;
    s.intercept = my - s.slope * mx;
    return s;
}

ConvergenceSummary convergence_report(const TrainTrace& trace) {
    std::vector<double> norms;
    norms.reserve(trace.epochs.size());
    for (const auto& r : trace.epochs) norms.push_back(r.grad_norm);
    return convergence_report(norms);
}

std::string convergence_to_csv(const ConvergenceSummary& s, const std::vector<double>& grad_norms) {
    std::string out = "epoch,grad_norm,min_so_far\n";
    char buf[96];
    for (std::size_t t = 0; t < s.min_so_far.size(); ++t) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", t + 1, grad_norms[t], s.min_so_far[t]);
        out += buf;
    }
    return out;
}

std::string convergence_to_json(const ConvergenceSummary& s) {
    nlohmann::ordered_json j;
    j["epochs"] = s.epochs;
    j["slope"] = s.slope;
    j["intercept"] = s.intercept;
    j["final_min_grad_norm"] = s.min_so_far.empty() ? 0.0 : s.min_so_far.back();
    j["reference_slope"] = -0.5;
    return j.dump(2) + "\n";
}

}  // namespace sic
