#pragma once

#include <string>
#include <vector>

namespace mfcast::cli {

// Executes one subcommand against a JSON config. `overrides` are dotted-path
// assignments (`key.sub=value`) applied on top of the config. Returns the
// process exit code: 0 success, 2 config schema violation, 1 runtime error.
int run(const std::string& subcommand, const std::string& config_path,
        const std::vector<std::string>& overrides, const std::string& output_dir = "",
        int jobs = 1);

}  // namespace mfcast::cli
