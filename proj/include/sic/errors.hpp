#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sic {

/// Broad failure class; the CLI maps each one to a process exit code.
enum class ErrorKind {
    Config,   // bad parameters or missing inputs (exit 2)
    Data,     // malformed or inconsistent data (exit 3)
    Numeric,  // degenerate numerics (exit 4)
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

int exit_code(ErrorKind kind) noexcept;

#define SIC_DEFINE_ERROR(Name, Kind)                                              \
    class Name : public Error {                                                   \
    public:                                                                       \
        explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
    };

SIC_DEFINE_ERROR(IoError, Config)
SIC_DEFINE_ERROR(ConfigError, Config)
SIC_DEFINE_ERROR(TooFewPoints, Config)
SIC_DEFINE_ERROR(KTooLarge, Config)
SIC_DEFINE_ERROR(BudgetTooLarge, Config)
SIC_DEFINE_ERROR(FormatError, Data)
SIC_DEFINE_ERROR(DataError, Data)
SIC_DEFINE_ERROR(DimensionMismatch, Data)
SIC_DEFINE_ERROR(SizeMismatch, Data)
SIC_DEFINE_ERROR(ZeroVector, Numeric)
SIC_DEFINE_ERROR(EmptyResult, Numeric)
SIC_DEFINE_ERROR(EmptyColumn, Numeric)
SIC_DEFINE_ERROR(TooShort, Numeric)

#undef SIC_DEFINE_ERROR

/// A zero-norm row that cannot be normalized.
class DegenerateRowError : public Error {
public:
    explicit DegenerateRowError(std::size_t row);
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

}  // namespace sic
