#pragma once

#include <string>
#include <vector>

#include "medrep/error.hpp"

namespace medrep::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitArtifact = 4;

int exit_code_for(ErrorCode code);

// Arguments without the program name, e.g. {"synth", "--config", "x.toml"}.
int run_cli(const std::vector<std::string>& args);

}  // namespace medrep::cli
