#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace evolab {

/// Exit codes of cli_main.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;      ///< usage, validation or runtime failure
inline constexpr int kExitThreshold = 2;  ///< ran, but --check thresholds failed

/// Entry point behind the `evolab` executable; args excludes the program name.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace evolab
