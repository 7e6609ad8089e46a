#pragma once

#include <map>
#include <string>

namespace hvlab::cli {

inline constexpr const char* kArtifactName = "hvlab";
inline constexpr const char* kArtifactVersion = "0.1.0";

// Resolved run description: subcommand plus the full parameter map after
// defaults, config file, and flag overrides have been merged (flags win).
// Values stay stringly typed; subcommands parse and validate on use.
struct ExperimentConfig {
    std::string subcommand;
    std::map<std::string, std::string> params;
};

// Builds the config from argv. Accepts "--key value" and "--key=value";
// "--config PATH" loads a flat key=value file or a manifest.json produced
// by an earlier run. Throws std::invalid_argument naming the offending key.
ExperimentConfig parse_args(int argc, const char* const* argv);

// Executes one run: writes CSV outputs plus a manifest.json echoing the
// resolved config into the output directory. Returns the exit status.
int run(const ExperimentConfig& cfg);

// parse + run + error reporting; the body of main()
int run_main(int argc, const char* const* argv);

std::string usage();

} // namespace hvlab::cli
