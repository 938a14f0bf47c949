#include "sic/soft_assignment.hpp"

#include "sic/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sic {

SoftAssignment::SoftAssignment(std::size_t rows, std::size_t clusters, std::vector<double> values)
    : rows_(rows), clusters_(clusters), q_(std::move(values)) {
    if (rows_ == 0 || clusters_ == 0) throw DataError("soft assignment must be non-empty");
    if (q_.size() != rows_ * clusters_) throw DataError("soft assignment storage does not match n*c");
    for (std::size_t i = 0; i < rows_; ++i) {
        double s = 0.0;
        for (double v : row(i)) {
            if (!(v >= 0.0 && v <= 1.0)) throw DataError("soft assignment entry outside [0,1] in row " + std::to_string(i));
            s += v;
        }
        if (std::abs(s - 1.0) > 1e-6) throw DataError("soft assignment row " + std::to_string(i) + " sums to " + std::to_string(s));
    }
}

std::vector<std::uint32_t> SoftAssignment::argmax() const {
    std::vector<std::uint32_t> out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
        auto r = row(i);
        out[i] = static_cast<std::uint32_t>(std::max_element(r.begin(), r.end()) - r.begin());
    }
    return out;
}

void softmax(std::span<const double> logits, std::span<double> out) {
    const double mx = *std::max_element(logits.begin(), logits.end());
    double s = 0.0;
    for (std::size_t l = 0; l < logits.size(); ++l) {
        out[l] = std::exp(logits[l] - mx);
        s += out[l];
    }
    for (auto& v : out) v /= s;
}

}  // namespace sic
