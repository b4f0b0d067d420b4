#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "exakit/matrix.hpp"
#include "exakit/precision.hpp"

// Reference dense kernels for the five LU phases. Every kernel is
// single-threaded with one fixed accumulation order, so the same inputs
// give bit-identical outputs no matter how a caller slices the work.

namespace exakit {

/// Row chosen at each elimination step, relative to the block's first row.
/// entries[k] >= k.
using PivotVector = std::vector<std::size_t>;

class SingularMatrixError : public std::runtime_error {
public:
    SingularMatrixError(const std::string& what, std::size_t index)
        : std::runtime_error(what), index_(index) {}
    /// Column (pivoted kernels) or elimination step (pivot-free kernels).
    std::size_t index() const { return index_; }

private:
    std::size_t index_;
};

class PrecisionOverflowError : public std::runtime_error {
public:
    PrecisionOverflowError(const std::string& what, std::size_t row, std::size_t col)
        : std::runtime_error(what), row_(row), col_(col) {}
    std::size_t row() const { return row_; }
    std::size_t col() const { return col_; }

private:
    std::size_t row_;
    std::size_t col_;
};

/// Unblocked right-looking LU with partial pivoting, in place. Ties in the
/// pivot search go to the lowest row. Throws SingularMatrixError when every
/// candidate in a column is exactly zero.
PivotVector panel_factorize(MatrixRef<double> panel);

enum class SwapOrder { Forward, Reverse };

/// laswp: for k in order, exchange rows k and pivots[k].
void apply_row_swaps(MatrixRef<double> block, std::span<const std::size_t> pivots,
                     SwapOrder order = SwapOrder::Forward);

/// Solve L * X = U in place (U overwritten by X), L unit lower triangular.
/// The diagonal and upper part of L are never read.
void trsm_update(ConstMatrixRef<double> l, MatrixRef<double> u);

/// C <- C - A * B. Each C(i,j) subtracts one sum accumulated over ascending k.
void gemm_update(MatrixRef<double> c, ConstMatrixRef<double> a, ConstMatrixRef<double> b);

/// One step of blocked right-looking LU with partial pivoting on the full
/// square matrix: factor panel k, swap rows across all other columns
/// (LAPACK convention), solve the U row, update the trailing matrix.
/// Appends the panel's pivots (as global row indices) to `pivots`.
void lu_blocked_step(MatrixRef<double> a, std::size_t nb, std::size_t k, PivotVector& pivots);

/// Blocked LU with partial pivoting: P * A = L * U. Returns global pivots.
PivotVector lu_factorize(MatrixRef<double> a, std::size_t nb);

/// Pivot-free LU factors in their storage precision, packed (unit L below
/// the diagonal, U on and above).
class NoPivotFactors {
public:
    using Storage = std::variant<Matrix<double>, Matrix<float>, Matrix<Bf16>>;

    explicit NoPivotFactors(Storage packed);

    PrecisionTag precision() const;
    std::size_t order() const { return widened_.rows(); }
    std::size_t storage_bytes() const;
    const Storage& packed() const { return packed_; }

    /// Packed factors widened to FP64 (exact).
    const DenseMatrix& widened() const { return widened_; }
    DenseMatrix lower() const;
    DenseMatrix upper() const;

    /// Overwrite rhs with (L U)^{-1} rhs using the widened factors in FP64.
    void solve_in_place(std::span<double> rhs) const;

private:
    Storage packed_;
    DenseMatrix widened_;
};

/// Blocked right-looking LU without pivoting. Storage is `store`; panel and
/// triangular-solve arithmetic runs in FP32 for BF16/FP32 storage and FP64
/// otherwise; BF16 trailing updates go through bf16_gemm. Results are
/// rounded to storage after each block-level update.
///
/// Throws SingularMatrixError (index = elimination step) on a zero pivot and
/// PrecisionOverflowError when a stored element becomes non-finite.
NoPivotFactors lu_nopivot(ConstMatrixRef<double> a, std::size_t nb, PrecisionTag store);

/// Exact flop counts of the kernels above (multiply-add = 2, division = 1).
namespace flops {
std::uint64_t panel_factorize(std::uint64_t m, std::uint64_t nb);
std::uint64_t trsm(std::uint64_t nb, std::uint64_t width);
std::uint64_t gemm(std::uint64_t m, std::uint64_t n, std::uint64_t k);
/// Full LU of an n x n matrix: (4n^3 - 3n^2 - n) / 6, independent of blocking.
std::uint64_t lu(std::uint64_t n);
}  // namespace flops

}  // namespace exakit
