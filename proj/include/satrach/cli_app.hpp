#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace satrach {

// Bad invocation: missing/malformed config, malformed override, unknown key.
// Mapped to exit status 2; runtime failures exit 1.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string subcommand;
    std::string config_path;
    std::string output_dir = "out";
    std::uint64_t seed = 0;
    nlohmann::ordered_json config;  // config file merged with --set overrides
};

// Parses argv (without the program name), loads the config file, applies
// overrides, validates keys against the subcommand's schema and extracts the
// mandatory seed.
RunConfig parse_args(const std::vector<std::string>& args);

// Runs the subcommand, writing all artifacts plus manifest.json under
// output_dir. Partial outputs are removed on failure. Returns 0.
int dispatch(const RunConfig& rc);

// parse_args + dispatch with exceptions mapped to exit statuses
// (0 ok, 2 usage, 1 runtime).
int cli_main(int argc, char** argv);

}  // namespace satrach
