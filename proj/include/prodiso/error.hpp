#pragma once

#include <stdexcept>
#include <string>

namespace prodiso {

enum class ErrorKind {
    NonDifferentiablePoint,
    DomainError,
    NoConvergence,
    GridTooNarrow,
    SingularShift,
    SignedWeight,
    NonConvexPotential,
    DimensionMismatch,
    HypothesisViolated,
    NotLogConcave,
    OutOfBudget,
    NonEvenBump,
    InfeasibleBasis,
    InvalidArgument,
};

const char* kind_name(ErrorKind k) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(kind_name(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace prodiso
