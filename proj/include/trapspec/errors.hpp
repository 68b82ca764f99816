#pragma once

#include <stdexcept>
#include <string>

namespace trapspec {

// Every error raised by the library carries a stable machine-readable kind,
// which the CLI copies into its JSON error report.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define TRAPSPEC_DEFINE_ERROR(Name)                                          \
    class Name : public Error {                                              \
    public:                                                                  \
        explicit Name(const std::string& what) : Error(#Name, what) {}       \
    };

TRAPSPEC_DEFINE_ERROR(DomainError)
TRAPSPEC_DEFINE_ERROR(PreconditionError)
TRAPSPEC_DEFINE_ERROR(MeshError)
TRAPSPEC_DEFINE_ERROR(ConvergenceError)
TRAPSPEC_DEFINE_ERROR(IllConditionedFit)
TRAPSPEC_DEFINE_ERROR(WindowTooNarrow)
TRAPSPEC_DEFINE_ERROR(BudgetExceeded)
TRAPSPEC_DEFINE_ERROR(DerivativeInstability)
TRAPSPEC_DEFINE_ERROR(NoiseFloor)
TRAPSPEC_DEFINE_ERROR(NoSolution)
TRAPSPEC_DEFINE_ERROR(InconsistentInvariants)
TRAPSPEC_DEFINE_ERROR(InvariantMismatch)
TRAPSPEC_DEFINE_ERROR(FormatError)
TRAPSPEC_DEFINE_ERROR(AmbiguousClassification)

#undef TRAPSPEC_DEFINE_ERROR

}  // namespace trapspec
