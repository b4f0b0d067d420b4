#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "exakit/dense.hpp"
#include "exakit/matrix.hpp"

namespace exakit {

enum class RefinementMethod { Plain, Gmres };

std::string to_string(RefinementMethod m);

struct MxpOptions {
    std::size_t nb = 128;
    double tol = 16.0;
    int max_iters = 50;
    PrecisionTag store = PrecisionTag::BF16;
    RefinementMethod method = RefinementMethod::Plain;
    int restart = 10;
};

struct RefinementReport {
    RefinementMethod method = RefinementMethod::Plain;
    PrecisionTag store = PrecisionTag::BF16;
    std::size_t n = 0;
    std::size_t nb = 0;
    int iterations = 0;
    /// Scaled FP64 residual after each outer iteration.
    std::vector<double> residual_history;
    bool converged = false;
    double final_residual = 0.0;
    std::uint64_t lowprec_flops = 0;
    std::uint64_t fp64_flops = 0;
    std::size_t storage_bytes = 0;
    /// Set when GMRES hit an exact Krylov breakdown.
    std::optional<std::string> diagnostic;
};

struct MxpResult {
    std::vector<double> x;
    RefinementReport report;
};

/// Entries uniform in [-0.5, 0.5) with each diagonal entry replaced by
/// n/4 + sum_{j != i} |a_ij|, which makes every row strictly diagonally dominant.
DenseMatrix generate_mxp_matrix(std::size_t n, std::uint64_t seed);

/// The matrix above plus a right-hand side drawn from the same stream.
std::pair<DenseMatrix, std::vector<double>> generate_mxp_system(std::size_t n, std::uint64_t seed);

/// Pivot-free LU in opts.store precision followed by FP64 refinement
/// (plain or GMRES per opts.method). Non-convergence is reported, not thrown.
MxpResult solve_mxp(const DenseMatrix& a, const std::vector<double>& b, const MxpOptions& opts);

/// Plain iterative refinement on existing factors.
MxpResult refine_plain(const DenseMatrix& a, const std::vector<double>& b, const NoPivotFactors& factors,
                       double tol, int max_iters);

/// Restarted GMRES(restart_m) refinement, left-preconditioned by the
/// factors, in FP64. One outer iteration is one restart cycle.
MxpResult refine_gmres(const DenseMatrix& a, const std::vector<double>& b, const NoPivotFactors& factors,
                       int restart_m, double tol, int max_iters);

/// FP64 flops of one plain refinement iteration at order n.
std::uint64_t plain_iteration_flops(std::uint64_t n);

/// Constant c in lowprec/fp64 >= n / (c * iterations * nb) for converged
/// plain refinement. The exact ratio is (n - 1) / (6 * iterations).
inline constexpr double kFlopRatioConstant = 8.0;

}  // namespace exakit
