#pragma once

#include <stdexcept>
#include <string>

namespace memodiff {

enum class ErrorCode {
    InvalidArgument,
    DimensionMismatch,
    CoercivityViolation,
    UnsupportedVariant,
    UnsupportedKernel,
    MisalignedAtom,
    InsufficientHistory,
    NonFinite,
    HistoryMismatch,
    NoAdmissibleDelta,
    IterationDivergence,
    Resolution,
    ConfigInvalid,
};

const char* to_string(ErrorCode code);

/// Library-wide exception. Every failure carries a machine-readable code so
/// callers (and the CLI) can map it to exit statuses without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline const char* to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::DimensionMismatch: return "dimension-mismatch";
    case ErrorCode::CoercivityViolation: return "coercivity-violation";
    case ErrorCode::UnsupportedVariant: return "unsupported-variant";
    case ErrorCode::UnsupportedKernel: return "unsupported-kernel";
    case ErrorCode::MisalignedAtom: return "misaligned-atom";
    case ErrorCode::InsufficientHistory: return "insufficient-history";
    case ErrorCode::NonFinite: return "non-finite";
    case ErrorCode::HistoryMismatch: return "history-mismatch";
    case ErrorCode::NoAdmissibleDelta: return "no-admissible-delta";
    case ErrorCode::IterationDivergence: return "iteration-divergence";
    case ErrorCode::Resolution: return "resolution";
    case ErrorCode::ConfigInvalid: return "config-invalid";
    }
    return "unknown";
}

} // namespace memodiff
