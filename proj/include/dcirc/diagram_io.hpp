#pragma once

#include <iosfwd>
#include <string>

#include "dcirc/model.hpp"

namespace dcirc {

// Diagram files are JSON with a required `format: 1` field and sections
// `variables`, `chance`, `decisions`, `utility`, `meta_parameters`,
// `evidence`. All tables are flat arrays in row-major order with the first
// parent slowest. See diagrams/ for worked files.
InfluenceDiagram load_diagram(const std::string& text);
InfluenceDiagram load_diagram_file(const std::string& path);

std::string serialize(const InfluenceDiagram& d);

// Strategy files map each decision id to an array with one alternative
// label (or index) per information-set configuration.
Strategy load_strategy(const InfluenceDiagram& d, const std::string& text);
Strategy load_strategy_file(const InfluenceDiagram& d, const std::string& path);

}  // namespace dcirc
