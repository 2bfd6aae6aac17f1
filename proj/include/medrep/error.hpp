#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace medrep {

enum class ErrorCode {
    IoError,
    ParseError,
    DuplicateConcept,
    BadDomain,
    UnknownConcept,
    BadDimension,
    ShapeError,
    DegenerateEmbedding,
    DivergedError,
    TooFewConcepts,
    NotIndexed,
    NotBinned,
    OrderError,
    TooLong,
    BadVisit,
    EmptyTrajectory,
    DegenerateLabels,
    UndefinedMetric,
    ConfigError,
    ArtifactError,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// Training divergence also reports where it happened.
class DivergedError : public Error {
public:
    DivergedError(int iteration, const std::string& what)
        : Error(ErrorCode::DivergedError, "iteration " + std::to_string(iteration) + ": " + what),
          iteration_(iteration) {}

    int iteration() const noexcept { return iteration_; }

private:
    int iteration_;
};

}  // namespace medrep
