#include "sic/errors.hpp"

namespace sic {

int exit_code(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Config: return 2;
        case ErrorKind::Data: return 3;
        case ErrorKind::Numeric: return 4;
    }
    return 1;
}

DegenerateRowError::DegenerateRowError(std::size_t row)
    : Error(ErrorKind::Numeric, "row " + std::to_string(row) + " has zero L2 norm"), row_(row) {}

}  // namespace sic
