#pragma once

#include "config.hpp"

namespace gd {

// Exit codes: 0 pass, 1 check failed, 2 config error, 3 solver failure.
int run_command(const RunConfig& cfg, const std::string& out_dir);

// Convenience wrapper: parse + run, mapping exceptions onto exit codes.
int run_config_text(const std::string& config_json, const std::string& out_dir,
                    std::string* error_message = nullptr);

}  // namespace gd
