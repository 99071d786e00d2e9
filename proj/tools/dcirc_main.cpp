#include <cstdio>
#include <string>
#include <vector>

#include "dcirc/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    dcirc::CliResult res = dcirc::run_cli(std::move(args));
    std::fputs(res.out.c_str(), stdout);
    std::fputs(res.err.c_str(), stderr);
    return res.code;
}
