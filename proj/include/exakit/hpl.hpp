#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "exakit/dense.hpp"
#include "exakit/grid.hpp"
#include "exakit/matrix.hpp"

namespace exakit {

/// Standard HPL acceptance threshold on the scaled residual.
inline constexpr double kResidualThreshold = 16.0;
/// Unit roundoff used by the scaled residual (FP64 epsilon, 2^-52).
inline constexpr double kEpsilon = 0x1.0p-52;

/// Global matrix split into one local shard per rank of a block-cyclic grid.
class DistributedMatrix {
public:
    DistributedMatrix(const ProcessGrid& grid, std::int64_t n);
    static DistributedMatrix scatter(const DenseMatrix& global, const ProcessGrid& grid);

    const ProcessGrid& grid() const { return grid_; }
    std::int64_t n() const { return n_; }

    DenseMatrix& shard(std::int64_t prow, std::int64_t pcol) { return shards_[grid_.rank_of(prow, pcol)]; }
    const DenseMatrix& shard(std::int64_t prow, std::int64_t pcol) const {
        return shards_[grid_.rank_of(prow, pcol)];
    }

    double get(std::int64_t i, std::int64_t j) const;
    double& at(std::int64_t i, std::int64_t j);

    DenseMatrix assemble() const;

private:
    ProcessGrid grid_;
    std::int64_t n_;
    std::vector<DenseMatrix> shards_;
};

/// Exact per-panel operation and byte counts.
struct PanelRecord {
    std::int64_t panel = 0;
    /// Factored panel payload, (N - k*NB) * NB * 8.
    std::uint64_t bytes_bcast = 0;
    /// Row-interchange volume on the trailing columns: two rows of the
    /// trailing width per non-trivial pivot.
    std::uint64_t bytes_swap = 0;
    std::uint64_t flops_pfact = 0;
    std::uint64_t flops_dtrsm = 0;
    std::uint64_t flops_dgemm = 0;
    friend bool operator==(const PanelRecord&, const PanelRecord&) = default;
};

/// Bytes that actually crossed between distinct simulated ranks.
struct CommCounters {
    std::uint64_t bcast_bytes = 0;
    std::uint64_t swap_bytes = 0;
    std::uint64_t u_bcast_bytes = 0;
};

/// Mutable state of an in-progress factorization. The right-hand side is
/// replicated and carried through the same swaps and eliminations.
struct HplState {
    BenchmarkConfig cfg;
    ProcessGrid grid;
    DistributedMatrix a;
    std::vector<double> b;
    PivotVector pivots;
    std::int64_t next_panel = 0;
    std::vector<PanelRecord> trace;
    CommCounters comm;
};

/// Uniform entries in [-0.5, 0.5), column-major A first, then b.
std::pair<DenseMatrix, std::vector<double>> generate_hpl_system(std::int64_t n, std::uint64_t seed);

/// Builds the initial state; throws ContractViolation if cfg is invalid.
HplState make_hpl_state(const BenchmarkConfig& cfg, const DenseMatrix& a, std::vector<double> b);

/// Advances panel k (must equal state.next_panel) through PFACT, BCAST,
/// SWAP, DTRSM and DGEMM.
void panel_step(HplState& state, std::int64_t k);

/// Solves U x = y after the last panel.
std::vector<double> back_substitute(const HplState& state);

/// ||Ax - b||_inf / (eps * (||A||_inf * ||x||_inf + ||b||_inf) * n)
double scaled_residual(const DenseMatrix& a, std::span<const double> x, std::span<const double> b);

struct RunReport {
    std::int64_t n = 0;
    std::int64_t nb = 0;
    std::int64_t p = 1;
    std::int64_t q = 1;
    int lookahead = 1;
    std::optional<std::uint64_t> seed;
    std::int64_t panels = 0;
    double residual = 0.0;
    double threshold = kResidualThreshold;
    bool passed = false;
    /// Rate implied by modeled phase times; absent for numerical runs.
    std::optional<double> gflops_equiv;
    std::vector<double> x;
    std::vector<PanelRecord> trace;
    CommCounters comm;
};

/// Desk-scale HPL on simulated ranks. Largest supported N.
inline constexpr std::int64_t kMaxDeskN = 4096;

RunReport run_hpl(const BenchmarkConfig& cfg, std::uint64_t seed);
RunReport run_hpl(const BenchmarkConfig& cfg, const DenseMatrix& a, const std::vector<double>& b);

std::vector<PanelRecord> emit_phase_trace(const RunReport& report);

}  // namespace exakit
