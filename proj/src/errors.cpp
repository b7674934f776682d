#include "gfruin/errors.hpp"

namespace gfruin {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::NegativeCoefficient: return "NegativeCoefficient";
        case ErrorKind::ZeroG0: return "ZeroG0";
        case ErrorKind::DriftViolation: return "DriftViolation";
        case ErrorKind::DivergentNorm: return "DivergentNorm";
        case ErrorKind::NonFiniteMGF: return "NonFiniteMGF";
        case ErrorKind::OutOfRange: return "OutOfRange";
        case ErrorKind::RejectionBudgetExceeded: return "RejectionBudgetExceeded";
        case ErrorKind::DivergentIntegral: return "DivergentIntegral";
        case ErrorKind::NoRoot: return "NoRoot";
        case ErrorKind::WrongRegime: return "WrongRegime";
        case ErrorKind::Unsupported: return "Unsupported";
        case ErrorKind::NoHits: return "NoHits";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

int exit_code_for(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Unsupported:
        case ErrorKind::WrongRegime:
            return 2;
        case ErrorKind::ConfigError:
            return 4;
        default:
            return 3;
    }
}

}  // namespace gfruin
