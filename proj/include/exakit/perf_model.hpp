#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "exakit/grid.hpp"

// Analytic per-panel cost model of blocked LU on a P x Q grid.
//
// For panel k with trailing size N_k = N - k*NB:
//   t_dgemm = 2 N_k^2 NB / (P Q R_dgemm)
//   t_pfact = 2 N_k NB^2 / R_pfact
//   t_bcast = alpha * ceil(log2 Q) + N_k NB e / BW
//   t_swap  = alpha + N_k NB e / BW
// The last panel has no trailing matrix, so its t_dgemm and t_swap are 0.
// A panel costs max(t_dgemm, t_pfact + t_bcast, t_swap); with lookahead the
// PFACT of every panel but the first hides behind the previous DGEMM.

namespace exakit {

struct MachineParams {
    double r_dgemm = 0.0;        ///< per-rank GEMM rate, flop/s
    double r_pfact = 0.0;        ///< panel factorization rate, flop/s
    double bw_net = 0.0;         ///< effective per-rank bandwidth, bytes/s
    double latency_alpha = 0.0;  ///< per-message latency, s
    std::int64_t n = 0;
    std::int64_t nb = 1;
    std::int64_t p = 1;
    std::int64_t q = 1;
    int lookahead = 1;
    double element_bytes = 8.0;

    std::int64_t panels() const { return n / nb; }
};

/// Throws ContractViolation on non-positive rates/bandwidth, negative
/// latency, or an N that is not a positive multiple of NB.
void check_params(const MachineParams& mp);

enum class BoundBy { Dgemm, PfactBcast, Bcast, Swap };

std::string to_string(BoundBy b);

struct PhaseTimes {
    std::int64_t k = 0;
    double t_dgemm = 0.0;
    double t_pfact = 0.0;
    double t_bcast = 0.0;
    double t_swap = 0.0;
    /// Term of the max-composition that this panel pays. Ties go to the
    /// term listed first in BoundBy.
    BoundBy bound_by = BoundBy::Dgemm;
    /// max-composition summand for this panel.
    double step = 0.0;
};

PhaseTimes phase_times(const MachineParams& mp, std::int64_t k);

struct RuntimeTrace {
    double total = 0.0;
    std::vector<PhaseTimes> panels;
};

RuntimeTrace total_runtime(const MachineParams& mp);

/// Smallest k with t_dgemm(k) < t_swap(k), if any.
std::optional<std::int64_t> crossover_index(const MachineParams& mp);

/// First panel whose bound_by is not DGEMM, if any. The last panel has no
/// trailing update and is never reported.
std::optional<std::int64_t> bound_switch_index(const RuntimeTrace& trace);

/// 2/3 N^3 held exactly as a fraction over 3.
struct FlopCount {
    unsigned __int128 numerator = 0;  ///< 2 N^3
    static constexpr unsigned denominator = 3;
    double value() const;
};

FlopCount hpl_flops_exact(std::uint64_t n);
/// (2/3) N^3 as the nearest double. The O(N^2) term is not included.
double hpl_flops(std::uint64_t n);

double rmax(const MachineParams& mp);

double scaling_efficiency(double rmax_n, double n_nodes, double rmax_1);

struct CalibrationTargets {
    double rmax = 0.0;
    /// Optional scaling-efficiency target checked against rmax_single_node.
    std::optional<double> efficiency;
    double nodes = 1.0;
    std::optional<double> rmax_single_node;
};

enum class FreeParam { RDgemm, BwNet, Both };

struct CalibrationBounds {
    double r_dgemm_lo = 1e9;
    double r_dgemm_hi = 1e15;
    double bw_net_lo = 1e8;
    double bw_net_hi = 1e14;
    int grid_points = 25;
};

struct CalibrationResult {
    bool ok = false;
    MachineParams params;
    double achieved_rmax = 0.0;
    double rel_error = 0.0;
    std::optional<double> achieved_efficiency;
    std::string diagnostic;
};

/// Fits the free parameter(s) so the modeled R_max matches the target.
/// R_max is monotone in each free parameter, so a single free parameter is
/// fitted by log-space bisection. With both free, BW_net is scanned over a
/// log grid and R_dgemm bisected at each point; the fit with the smallest
/// error wins, ties to the smaller R_dgemm. Fails (ok == false) when the
/// best relative error exceeds 20%.
CalibrationResult calibrate(const CalibrationTargets& targets, const MachineParams& fixed, FreeParam free,
                            const CalibrationBounds& bounds = {});

}  // namespace exakit
