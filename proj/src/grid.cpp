#include "exakit/grid.hpp"

#include "exakit/matrix.hpp"

namespace exakit {

ProcessGrid::ProcessGrid(std::int64_t p, std::int64_t q, std::int64_t nb) : p_(p), q_(q), nb_(nb) {
    if (p < 1 || q < 1 || nb < 1) throw ContractViolation("ProcessGrid: P, Q and NB must be >= 1");
}

std::int64_t ProcessGrid::local_extent(std::int64_t n, std::int64_t coord, std::int64_t procs) const {
    const std::int64_t blocks = n / nb_;
    const std::int64_t extra = n % nb_;
    std::int64_t count = (blocks / procs) * nb_;
    const std::int64_t rem = blocks % procs;
    if (coord < rem) {
        count += nb_;
    } else if (coord == rem) {
        count += extra;
    }
    return count;
}

Ownership owner(std::int64_t i, std::int64_t j, const ProcessGrid& grid, std::int64_t n) {
    if (i < 0 || j < 0 || i >= n || j >= n) throw ContractViolation("owner: index out of range");
    return {grid.owner_coord(i, grid.p()), grid.owner_coord(j, grid.q()), grid.local_index(i, grid.p()),
            grid.local_index(j, grid.q())};
}

std::string to_string(PrecisionMode m) { return m == PrecisionMode::HPL64 ? "hpl" : "mxp"; }

ConfigCheck validate_config(const BenchmarkConfig& cfg) {
    ConfigCheck out;
    auto& v = out.violations;
    if (cfg.n < 1) v.push_back("N must be >= 1");
    if (cfg.nb < 1) v.push_back("NB must be >= 1");
    if (cfg.p < 1) v.push_back("P must be >= 1");
    if (cfg.q < 1) v.push_back("Q must be >= 1");
    if (cfg.nodes < 1) v.push_back("nodes must be >= 1");
    if (cfg.ppn < 1) v.push_back("PPN must be >= 1");
    if (cfg.p * cfg.q != cfg.nodes * cfg.ppn) v.push_back("P·Q ≠ nodes·PPN");
    if (cfg.nb >= 1 && cfg.n >= 1 && cfg.n % cfg.nb != 0) v.push_back("N mod NB ≠ 0");
    if (cfg.lookahead != 0 && cfg.lookahead != 1) v.push_back("lookahead must be 0 or 1");
    if (cfg.nb >= 1 && cfg.n >= 1) out.panels = cfg.n / cfg.nb;
    return out;
}

}  // namespace exakit
