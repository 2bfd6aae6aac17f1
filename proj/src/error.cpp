#include "medrep/error.hpp"

namespace medrep {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::DuplicateConcept: return "DuplicateConcept";
        case ErrorCode::BadDomain: return "BadDomain";
        case ErrorCode::UnknownConcept: return "UnknownConcept";
        case ErrorCode::BadDimension: return "BadDimension";
        case ErrorCode::ShapeError: return "ShapeError";
        case ErrorCode::DegenerateEmbedding: return "DegenerateEmbedding";
        case ErrorCode::DivergedError: return "DivergedError";
        case ErrorCode::TooFewConcepts: return "TooFewConcepts";
        case ErrorCode::NotIndexed: return "NotIndexed";
        case ErrorCode::NotBinned: return "NotBinned";
        case ErrorCode::OrderError: return "OrderError";
        case ErrorCode::TooLong: return "TooLong";
        case ErrorCode::BadVisit: return "BadVisit";
        case ErrorCode::EmptyTrajectory: return "EmptyTrajectory";
        case ErrorCode::DegenerateLabels: return "DegenerateLabels";
        case ErrorCode::UndefinedMetric: return "UndefinedMetric";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::ArtifactError: return "ArtifactError";
    }
    return "Unknown";
}

}  // namespace medrep
