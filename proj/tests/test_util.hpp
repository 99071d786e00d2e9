#pragma once

#include <cstdlib>
#include <string>

#include "dcirc/diagram_io.hpp"

inline std::string repo_root() {
    const char* env = std::getenv("DCIRC_ROOT");
    return env ? env : ".";
}

inline dcirc::InfluenceDiagram load_example(const std::string& name) {
    return dcirc::load_diagram_file(repo_root() + "/diagrams/" + name + ".json");
}
