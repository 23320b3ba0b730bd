#include "forge/error.hpp"

namespace forge {

std::string_view error_kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::BackendUnavailable: return "BackendUnavailable";
        case ErrorKind::EmptyCompletion: return "EmptyCompletion";
        case ErrorKind::UnparseableOutput: return "UnparseableOutput";
        case ErrorKind::UnparseableVerdict: return "UnparseableVerdict";
        case ErrorKind::UnparseableChoice: return "UnparseableChoice";
        case ErrorKind::EmptyDecomposition: return "EmptyDecomposition";
        case ErrorKind::FileUnreadable: return "FileUnreadable";
        case ErrorKind::FileUnwritable: return "FileUnwritable";
        case ErrorKind::SchemaViolation: return "SchemaViolation";
        case ErrorKind::PreconditionViolation: return "PreconditionViolation";
        case ErrorKind::ExportGateViolation: return "ExportGateViolation";
        case ErrorKind::InvariantViolation: return "InvariantViolation";
        case ErrorKind::IncompleteSurvey: return "IncompleteSurvey";
        case ErrorKind::StageOrderViolation: return "StageOrderViolation";
        case ErrorKind::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

}  // namespace forge
