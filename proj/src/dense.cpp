#include "exakit/dense.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "exakit/bf16_gemm.hpp"

namespace exakit {

PivotVector panel_factorize(MatrixRef<double> p) {
    const std::size_t m = p.rows;
    const std::size_t nb = p.cols;
    if (nb == 0 || m < nb) throw ContractViolation("panel_factorize: requires m >= nb >= 1");

    PivotVector pivots(nb);
    for (std::size_t j = 0; j < nb; ++j) {
        std::size_t piv = j;
        double best = std::fabs(p(j, j));
        for (std::size_t i = j + 1; i < m; ++i) {
            const double v = std::fabs(p(i, j));
            if (v > best) {
                best = v;
                piv = i;
            }
        }
        if (best == 0.0) {
            throw SingularMatrixError("panel_factorize: zero pivot column " + std::to_string(j), j);
        }
        pivots[j] = piv;
        if (piv != j) {
            for (std::size_t c = 0; c < nb; ++c) std::swap(p(j, c), p(piv, c));
        }
        const double d = p(j, j);
        for (std::size_t i = j + 1; i < m; ++i) p(i, j) /= d;
        for (std::size_t c = j + 1; c < nb; ++c) {
            const double u = p(j, c);
            for (std::size_t i = j + 1; i < m; ++i) p(i, c) -= p(i, j) * u;
        }
    }
    return pivots;
}

void apply_row_swaps(MatrixRef<double> block, std::span<const std::size_t> pivots, SwapOrder order) {
    for (std::size_t k = 0; k < pivots.size(); ++k) {
        if (pivots[k] >= block.rows || k >= block.rows) {
            throw ContractViolation("apply_row_swaps: pivot index out of range");
        }
    }
    auto swap_rows = [&](std::size_t r1, std::size_t r2) {
        if (r1 == r2) return;
        for (std::size_t c = 0; c < block.cols; ++c) std::swap(block(r1, c), block(r2, c));
    };
    if (order == SwapOrder::Forward) {
        for (std::size_t k = 0; k < pivots.size(); ++k) swap_rows(k, pivots[k]);
    } else {
        for (std::size_t k = pivots.size(); k-- > 0;) swap_rows(k, pivots[k]);
    }
}

void trsm_update(ConstMatrixRef<double> l, MatrixRef<double> u) {
    if (l.rows != l.cols || l.rows != u.rows) throw ContractViolation("trsm_update: shape mismatch");
    const std::size_t nb = l.rows;
    for (std::size_t j = 0; j < u.cols; ++j) {
        for (std::size_t k = 0; k < nb; ++k) {
            const double x = u(k, j);
            for (std::size_t i = k + 1; i < nb; ++i) u(i, j) -= l(i, k) * x;
        }
    }
}

void gemm_update(MatrixRef<double> c, ConstMatrixRef<double> a, ConstMatrixRef<double> b) {
    if (a.cols != b.rows || a.rows != c.rows || b.cols != c.cols) {
        throw ContractViolation("gemm_update: shape mismatch");
    }
    const std::size_t m = c.rows;
    std::vector<double> acc(m);
    for (std::size_t j = 0; j < c.cols; ++j) {
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t l = 0; l < a.cols; ++l) {
            const double blj = b(l, j);
            const double* acol = &a(0, l);
            for (std::size_t i = 0; i < m; ++i) acc[i] += acol[i] * blj;
        }
        for (std::size_t i = 0; i < m; ++i) c(i, j) -= acc[i];
    }
}

void lu_blocked_step(MatrixRef<double> a, std::size_t nb, std::size_t k, PivotVector& pivots) {
    const std::size_t n = a.rows;
    if (a.cols != n || nb == 0 || n % nb != 0) {
        throw ContractViolation("lu_blocked_step: square matrix with n divisible by nb required");
    }
    const std::size_t k0 = k * nb;
    if (k0 >= n) throw ContractViolation("lu_blocked_step: panel index out of range");
    const std::size_t rest = n - k0;

    PivotVector local;
    try {
        local = panel_factorize(a.block(k0, k0, rest, nb));
    } catch (const SingularMatrixError& e) {
        throw SingularMatrixError("lu: singular at column " + std::to_string(k0 + e.index()),
                                  k0 + e.index());
    }

    auto below = a.block(k0, 0, rest, n);
    // Rows inside the panel columns were already swapped by panel_factorize.
    if (k0 > 0) apply_row_swaps(below.block(0, 0, rest, k0), local);
    const std::size_t trailing = n - k0 - nb;
    if (trailing > 0) {
        apply_row_swaps(below.block(0, k0 + nb, rest, trailing), local);
        trsm_update(a.block(k0, k0, nb, nb), a.block(k0, k0 + nb, nb, trailing));
        gemm_update(a.block(k0 + nb, k0 + nb, trailing, trailing),
                    a.block(k0 + nb, k0, trailing, nb), a.block(k0, k0 + nb, nb, trailing));
    }
    for (std::size_t p : local) pivots.push_back(p + k0);
}

PivotVector lu_factorize(MatrixRef<double> a, std::size_t nb) {
    if (a.rows != a.cols || nb == 0 || a.rows % nb != 0) {
        throw ContractViolation("lu_factorize: square matrix with n divisible by nb required");
    }
    PivotVector pivots;
    pivots.reserve(a.rows);
    for (std::size_t k = 0; k < a.rows / nb; ++k) lu_blocked_step(a, nb, k, pivots);
    return pivots;
}

// ---------------------------------------------------------------------------
// Pivot-free LU in storage precision

namespace {

template <class S>
double widen_one(S v) {
    if constexpr (std::is_same_v<S, Bf16>) {
        return v.to_double();
    } else {
        return static_cast<double>(v);
    }
}

template <class S, class C>
S narrow_one(C v) {
    if constexpr (std::is_same_v<S, Bf16>) {
        return round_to_bf16(static_cast<double>(v));
    } else {
        return static_cast<S>(v);
    }
}

template <class S>
void store_checked(Matrix<S>& w, std::size_t i, std::size_t j, double v) {
    const S s = narrow_one<S>(v);
    if (!std::isfinite(widen_one(s))) {
        throw PrecisionOverflowError("lu_nopivot: element (" + std::to_string(i) + ", " +
                                         std::to_string(j) + ") overflows " +
                                         std::string(to_string(precision_of<S>())),
                                     i, j);
    }
    w(i, j) = s;
}

template <class S, class C>
Matrix<C> load(const Matrix<S>& w, std::size_t i0, std::size_t j0, std::size_t m, std::size_t n) {
    Matrix<C> out(m, n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < m; ++i) out(i, j) = static_cast<C>(widen_one(w(i0 + i, j0 + j)));
    return out;
}

template <class S, class C>
void store(Matrix<S>& w, const Matrix<C>& src, std::size_t i0, std::size_t j0) {
    for (std::size_t j = 0; j < src.cols(); ++j)
        for (std::size_t i = 0; i < src.rows(); ++i) store_checked(w, i0 + i, j0 + j, src(i, j));
}

template <class S, class C>
Matrix<S> lu_nopivot_impl(ConstMatrixRef<double> a, std::size_t nb) {
    const std::size_t n = a.rows;
    Matrix<S> w(n, n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) store_checked(w, i, j, a(i, j));

    for (std::size_t k0 = 0; k0 < n; k0 += nb) {
        const std::size_t rest = n - k0;
        // Panel, unblocked.
        Matrix<C> p = load<S, C>(w, k0, k0, rest, nb);
        for (std::size_t j = 0; j < nb; ++j) {
            const C d = p(j, j);
            if (d == C{0}) {
                throw SingularMatrixError("lu_nopivot: zero pivot at step " + std::to_string(k0 + j),
                                          k0 + j);
            }
            for (std::size_t i = j + 1; i < rest; ++i) p(i, j) /= d;
            for (std::size_t c = j + 1; c < nb; ++c) {
                const C u = p(j, c);
                for (std::size_t i = j + 1; i < rest; ++i) p(i, c) -= p(i, j) * u;
            }
        }
        store(w, p, k0, k0);
        const std::size_t trailing = rest - nb;
        if (trailing == 0) break;

        // U row: solve against the stored (rounded) unit-lower block.
        Matrix<C> l11 = load<S, C>(w, k0, k0, nb, nb);
        Matrix<C> u12 = load<S, C>(w, k0, k0 + nb, nb, trailing);
        for (std::size_t j = 0; j < trailing; ++j)
            for (std::size_t kk = 0; kk < nb; ++kk) {
                const C x = u12(kk, j);
                for (std::size_t i = kk + 1; i < nb; ++i) u12(i, j) -= l11(i, kk) * x;
            }
        store(w, u12, k0, k0 + nb);

        // Trailing update from the stored factors.
        if constexpr (std::is_same_v<S, Bf16>) {
            Matrix<float> c22 = load<S, float>(w, k0 + nb, k0 + nb, trailing, trailing);
            auto wr = w.cref();
            bf16_gemm(wr.block(k0 + nb, k0, trailing, nb), wr.block(k0, k0 + nb, nb, trailing),
                      c22.ref(), -1.0f, 1.0f);
            store(w, c22, k0 + nb, k0 + nb);
        } else {
            auto wr = w.ref();
            auto c22 = wr.block(k0 + nb, k0 + nb, trailing, trailing);
            auto l21 = wr.block(k0 + nb, k0, trailing, nb);
            auto u = wr.block(k0, k0 + nb, nb, trailing);
            std::vector<S> acc(trailing);
            for (std::size_t j = 0; j < trailing; ++j) {
                std::fill(acc.begin(), acc.end(), S{0});
                for (std::size_t l = 0; l < nb; ++l) {
                    const S ulj = u(l, j);
                    for (std::size_t i = 0; i < trailing; ++i) acc[i] += l21(i, l) * ulj;
                }
                for (std::size_t i = 0; i < trailing; ++i) store_checked(w, k0 + nb + i, k0 + nb + j, c22(i, j) - acc[i]);
            }
        }
    }
    return w;
}

}  // namespace

NoPivotFactors::NoPivotFactors(Storage packed) : packed_(std::move(packed)) {
    std::visit(
        [this](const auto& m) {
            widened_ = DenseMatrix(m.rows(), m.cols());
            for (std::size_t j = 0; j < m.cols(); ++j)
                for (std::size_t i = 0; i < m.rows(); ++i) widened_(i, j) = widen_one(m(i, j));
        },
        packed_);
}

PrecisionTag NoPivotFactors::precision() const {
    return std::visit([](const auto& m) { return m.precision(); }, packed_);
}

std::size_t NoPivotFactors::storage_bytes() const {
    return std::visit([](const auto& m) { return m.storage_bytes(); }, packed_);
}

DenseMatrix NoPivotFactors::lower() const {
    const std::size_t n = order();
    DenseMatrix l = DenseMatrix::identity(n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = j + 1; i < n; ++i) l(i, j) = widened_(i, j);
    return l;
}

DenseMatrix NoPivotFactors::upper() const {
    const std::size_t n = order();
    DenseMatrix u(n, n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i <= j; ++i) u(i, j) = widened_(i, j);
    return u;
}

void NoPivotFactors::solve_in_place(std::span<double> x) const {
    const std::size_t n = order();
    if (x.size() != n) throw ContractViolation("NoPivotFactors::solve_in_place: size mismatch");
    const DenseMatrix& f = widened_;
    for (std::size_t k = 0; k < n; ++k) {
        const double xk = x[k];
        for (std::size_t i = k + 1; i < n; ++i) x[i] -= f(i, k) * xk;
    }
    for (std::size_t k = n; k-- > 0;) {
        x[k] /= f(k, k);
        const double xk = x[k];
        for (std::size_t i = 0; i < k; ++i) x[i] -= f(i, k) * xk;
    }
}

NoPivotFactors lu_nopivot(ConstMatrixRef<double> a, std::size_t nb, PrecisionTag store) {
    if (a.rows != a.cols || nb == 0 || a.rows % nb != 0) {
        throw ContractViolation("lu_nopivot: square matrix with n divisible by nb required");
    }
    switch (store) {
        case PrecisionTag::FP64: return NoPivotFactors(lu_nopivot_impl<double, double>(a, nb));
        case PrecisionTag::FP32: return NoPivotFactors(lu_nopivot_impl<float, float>(a, nb));
        case PrecisionTag::BF16: return NoPivotFactors(lu_nopivot_impl<Bf16, float>(a, nb));
    }
    throw ContractViolation("lu_nopivot: unknown precision");
}

namespace flops {

std::uint64_t panel_factorize(std::uint64_t m, std::uint64_t nb) {
    std::uint64_t total = 0;
    for (std::uint64_t j = 0; j < std::min(m, nb); ++j) {
        const std::uint64_t below = m - j - 1;
        total += below + 2 * below * (nb - j - 1);
    }
    return total;
}

std::uint64_t trsm(std::uint64_t nb, std::uint64_t width) { return nb * (nb - (nb > 0 ? 1 : 0)) * width; }

std::uint64_t gemm(std::uint64_t m, std::uint64_t n, std::uint64_t k) { return 2 * m * n * k; }

std::uint64_t lu(std::uint64_t n) { return (4 * n * n * n - 3 * n * n - n) / 6; }

}  // namespace flops

}  // namespace exakit
