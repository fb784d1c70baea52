// SPDX-License-Identifier: Apache-2.0
#pragma once

// Command layer behind the mustructure executable: validate, solve,
// converge and verify runs with JSON reports and CSV tables.

#include "mustructure/config.hpp"

#include <json.hpp>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mustructure::app {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitIncompatible = 3;
inline constexpr int kExitNoConvergence = 4;
inline constexpr int kExitVerification = 5;

int exit_code_for(ErrorKind kind) noexcept;

/// Names accepted by --check, in execution order, without "all".
const std::vector<std::string>& check_names();

/// Everything a run produces. Empty CSV strings are not written.
struct Outcome {
    int exit_code = kExitOk;
    nlohmann::json report;
    std::string solution_csv;
    std::string rates_csv;
    std::string verify_csv;
    std::string message;  // one line for stderr when the run did not succeed
};

/// Runs one command on a parsed configuration. Library errors are turned
/// into an error report and the matching exit code; nothing is written.
Outcome execute(const std::string& command, const RunConfig& cfg, const std::string& check = "all");

struct Request {
    std::string command;
    std::string config_path;
    std::string out_dir = "out";
    std::string check = "all";
    std::optional<unsigned> seed;  // overrides the configuration seed
};

/// Loads the configuration, executes and writes the output files into
/// out_dir (created if needed). Returns the process exit code.
int run(const Request& req, std::ostream& err);

}  // namespace mustructure::app
