#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace forge {

enum class ErrorKind {
    BackendUnavailable,
    EmptyCompletion,
    UnparseableOutput,
    UnparseableVerdict,
    UnparseableChoice,
    EmptyDecomposition,
    FileUnreadable,
    FileUnwritable,
    SchemaViolation,
    PreconditionViolation,
    ExportGateViolation,
    InvariantViolation,
    IncompleteSurvey,
    StageOrderViolation,
    ConfigError,
};

std::string_view error_kind_name(ErrorKind kind);

// Every failure raised by the library carries one of the kinds above so callers
// (and the CLI error report) can branch on it without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace forge
