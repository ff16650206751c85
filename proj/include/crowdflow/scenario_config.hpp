#pragma once

#include "crowdflow/sim.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace crowdflow {

/// Raised when a scenario document is unusable; carries every offending key.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> problems);
    const std::vector<std::string>& problems() const { return problems_; }

private:
    std::vector<std::string> problems_;
};

/// Parses a JSON scenario document. Missing fields keep their defaults;
/// unknown keys, wrong types and constraint violations are all reported.
/// `base_dir` resolves a relative planner.weights_file.
ScenarioConfig parse_scenario(const std::string& text, const std::filesystem::path& base_dir = {});

ScenarioConfig load_scenario(const std::filesystem::path& path);

}  // namespace crowdflow
