#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "dcirc/compile.hpp"
#include "dcirc/corpus.hpp"
#include "dcirc/oracle.hpp"
#include "dcirc/parallel.hpp"
#include "dcirc/sensitivity.hpp"
#include "dcirc/sweep.hpp"

using namespace dcirc;

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
    auto dt = std::chrono::steady_clock::now() - t0;
    return std::chrono::duration<double, std::milli>(dt).count();
}

struct Row {
    const char* label;
    double serial_ms;
    double parallel_ms;
    double checksum_serial;
    double checksum_parallel;
};

void print(const Row& r) {
    std::printf("%-24s %10.1f ms %10.1f ms   x%.2f   %s\n", r.label, r.serial_ms, r.parallel_ms,
                r.serial_ms / r.parallel_ms,
                r.checksum_serial == r.checksum_parallel ? "checksums equal" : "CHECKSUM MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
    int count = argc > 1 ? std::atoi(argv[1]) : 40;
    const char* root = std::getenv("DCIRC_ROOT");
    std::string base = root ? root : ".";
    auto cfg = corpus::load_config_file(base + "/diagrams/corpus.json");

    std::vector<InfluenceDiagram> diagrams;
    std::vector<DecisionCircuit> circuits;
    for (int i = 0; i < count; ++i) {
        diagrams.push_back(corpus::generate(cfg, i));
        circuits.push_back(compile(diagrams.back()));
    }
    std::printf("diagrams=%d threads=%d\n", count, max_threads());
    std::printf("%-24s %13s %13s\n", "kernel", "serial", "parallel");

    auto time_policy = [&](auto&& body) {
        double sums[2] = {0, 0};
        double times[2] = {0, 0};
        Exec policies[2] = {Exec::Serial, Exec::Parallel};
        for (int p = 0; p < 2; ++p) {
            auto t0 = std::chrono::steady_clock::now();
            for (int i = 0; i < count; ++i) sums[p] += body(i, policies[p]);
            times[p] = ms_since(t0);
        }
        return Row{"", times[0], times[1], sums[0], sums[1]};
    };

    Row meu = time_policy(
        [&](int i, Exec x) { return oracle::oracle_meu(diagrams[i], diagrams[i].evidence(), x).meu; });
    meu.label = "oracle strategy scan";
    print(meu);

    Row voi = time_policy([&](int i, Exec x) {
        auto eligible = corpus::voi_eligible(diagrams[i]);
        if (eligible.empty()) return 0.0;
        std::vector<VarId> vars(eligible.begin(),
                                eligible.begin() + std::min<size_t>(2, eligible.size()));
        return oracle::oracle_voi(diagrams[i], diagrams[i].evidence(), vars, x).voi;
    });
    voi.label = "oracle rollback voi";
    print(voi);

    Row sweep = time_policy([&](int i, Exec x) {
        auto eligible = corpus::voi_eligible(diagrams[i]);
        if (eligible.empty()) return 0.0;
        std::vector<VarId> vars(eligible.begin(),
                                eligible.begin() + std::min<size_t>(2, eligible.size()));
        return voi_sweep(diagrams[i], circuits[i], diagrams[i].evidence(), vars, 4096, x).voi;
    });
    sweep.label = "circuit voi sweep";
    print(sweep);

    Row grid = time_policy([&](int i, Exec x) {
        if (diagrams[i].metas().empty()) return 0.0;
        auto iv = oracle::oracle_interval(diagrams[i], diagrams[i].evidence(),
                                          diagrams[i].metas()[0].id, 0.05, x);
        return iv.lo + iv.hi;
    });
    grid.label = "oracle grid probing";
    print(grid);

    return 0;
}
