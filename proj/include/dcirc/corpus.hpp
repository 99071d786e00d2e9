#pragma once

#include <cstdint>

#include "dcirc/model.hpp"

// Deterministic random-diagram generator used by the test suite. The same
// (config, index) pair always yields the same diagram, on every platform:
// draws go through mt19937_64 with an explicit uniform mapping rather than
// the implementation-defined standard distributions.
namespace dcirc::corpus {

struct CorpusConfig {
    std::uint64_t seed = 20260823;
    int count = 200;
    int max_vars = 10;       // binary chance + decision variables, utility excluded
    int max_decisions = 2;
};

CorpusConfig load_config(const std::string& text);
CorpusConfig load_config_file(const std::string& path);

InfluenceDiagram generate(const CorpusConfig& cfg, int index);

// Chance variables with no decision ancestor and no observation; these are
// the legal targets for value-of-information queries.
std::vector<VarId> voi_eligible(const InfluenceDiagram& d);

}  // namespace dcirc::corpus
