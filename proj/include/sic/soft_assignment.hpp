#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace sic {

/// n x c row-stochastic matrix of cluster probabilities.
class SoftAssignment {
public:
    /// Throws DataError unless every entry lies in [0, 1] and every row sums
    /// to 1 within 1e-6.
    SoftAssignment(std::size_t rows, std::size_t clusters, std::vector<double> values);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t clusters() const noexcept { return clusters_; }
    std::span<const double> row(std::size_t i) const noexcept { return {q_.data() + i * clusters_, clusters_}; }
    double at(std::size_t i, std::size_t l) const noexcept { return q_[i * clusters_ + l]; }
    std::span<const double> data() const noexcept { return q_; }

    /// Row-wise argmax with ties to the lower column.
    std::vector<std::uint32_t> argmax() const;

private:
    std::size_t rows_;
    std::size_t clusters_;
    std::vector<double> q_;
};

/// Numerically stable softmax of one logit row, written into `out`.
void softmax(std::span<const double> logits, std::span<double> out);

}  // namespace sic
