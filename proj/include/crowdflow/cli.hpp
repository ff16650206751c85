#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace crowdflow::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { ok = 0, runtime_failure = 1, usage_error = 2 };

/// Parses "A..B" (inclusive) or a single seed.
std::optional<std::pair<std::uint64_t, std::uint64_t>> parse_seed_range(const std::string& text);

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace crowdflow::cli
