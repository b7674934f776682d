#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gfruin {

enum class ErrorKind {
    NegativeCoefficient,
    ZeroG0,
    DriftViolation,
    DivergentNorm,
    NonFiniteMGF,
    OutOfRange,
    RejectionBudgetExceeded,
    DivergentIntegral,
    NoRoot,
    WrongRegime,
    Unsupported,
    NoHits,
    InvalidArgument,
    ConfigError,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Process exit code for a failure of the given kind:
/// 2 unsupported regime, 3 numeric failure, 4 config error.
int exit_code_for(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace gfruin
