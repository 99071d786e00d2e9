#pragma once

#include <string>
#include <vector>

namespace dcirc {

struct CliResult {
    int code = 0;
    std::string out;
    std::string err;
};

// Command-line driver; args exclude the program name. Results are collected
// in `out`, diagnostics in `err`. Exit code 0 on success, 1 when the input
// document fails to parse or validate, 2 when a query precondition fails
// (including malformed command lines).
CliResult run_cli(std::vector<std::string> args);

}  // namespace dcirc
