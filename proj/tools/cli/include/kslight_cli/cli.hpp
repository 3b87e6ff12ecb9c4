#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace kslight::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomainError = 1;
inline constexpr int kExitUsage = 2;

/// Runs one subcommand: sweep | solve | defects | homodyne | reconstruct |
/// weak | state. `args` excludes the program name. Returns 0 on success, 1 on
/// a domain error (the message names the error type), 2 on a usage error
/// (synopsis on `err`, nothing written).
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// One-paragraph synopsis listing the subcommands.
[[nodiscard]] std::string synopsis();

}  // namespace kslight::cli
