#ifndef HAS_ERRORS_HPP
#define HAS_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <utility>

namespace has {

// Stable error codes surfaced by the toolchain. The CLI maps these to
// process exit codes; library callers switch on them.
enum class ErrorCode {
    MalformedModel,
    ValidationFailed,
    UnknownVariant,
    InvalidResult,
    BomCycle,
    ConstraintCycle,
    UnresolvedVariant,
    LevelTooLarge,
    UnknownAction,
    Infeasible,
    ExactLimit,
    NoRoute,
    BindingMismatch,
    CapacityExceeded,
    NotFound,
    MalformedUri,
    IoError,
    Usage,
};

inline const char* to_string(ErrorCode c) {
    switch (c) {
        case ErrorCode::MalformedModel: return "MALFORMED_MODEL";
        case ErrorCode::ValidationFailed: return "VALIDATION_FAILED";
        case ErrorCode::UnknownVariant: return "UNKNOWN_VARIANT";
        case ErrorCode::InvalidResult: return "INVALID_RESULT";
        case ErrorCode::BomCycle: return "BOM_CYCLE";
        case ErrorCode::ConstraintCycle: return "CONSTRAINT_CYCLE";
        case ErrorCode::UnresolvedVariant: return "UNRESOLVED_VARIANT";
        case ErrorCode::LevelTooLarge: return "LEVEL_TOO_LARGE";
        case ErrorCode::UnknownAction: return "UNKNOWN_ACTION";
        case ErrorCode::Infeasible: return "INFEASIBLE";
        case ErrorCode::ExactLimit: return "EXACT_LIMIT";
        case ErrorCode::NoRoute: return "NO_ROUTE";
        case ErrorCode::BindingMismatch: return "BINDING_MISMATCH";
        case ErrorCode::CapacityExceeded: return "CAPACITY_EXCEEDED";
        case ErrorCode::NotFound: return "NOT_FOUND";
        case ErrorCode::MalformedUri: return "MALFORMED_URI";
        case ErrorCode::IoError: return "IO_ERROR";
        case ErrorCode::Usage: return "USAGE";
    }
    return "UNKNOWN";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message),
          code_(code),
          message_(std::move(message)) {}

    ErrorCode code() const noexcept { return code_; }
    const std::string& message() const noexcept { return message_; }

private:
    ErrorCode code_;
    std::string message_;
};

}  // namespace has

#endif
