#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "exakit/bf16_gemm.hpp"
#include "exakit/dense.hpp"
#include "exakit/rng.hpp"

using namespace exakit;

namespace {

DenseMatrix random_matrix(std::size_t m, std::size_t n, std::uint64_t seed) {
    PortableRng rng(seed);
    DenseMatrix a(m, n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < m; ++i) a(i, j) = rng.centered();
    return a;
}

double max_abs(const DenseMatrix& a) {
    double v = 0.0;
    for (double x : a.storage()) v = std::max(v, std::fabs(x));
    return v;
}

DenseMatrix naive_product(const DenseMatrix& a, const DenseMatrix& b) {
    DenseMatrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (std::size_t l = 0; l < a.cols(); ++l) s += a(i, l) * b(l, j);
            c(i, j) = s;
        }
    return c;
}

// Counts every multiply-add (2) and division (1) of textbook unpivoted
// Gaussian elimination on an n x n matrix.
std::uint64_t counted_lu_flops(std::uint64_t n) {
    std::uint64_t f = 0;
    for (std::uint64_t k = 0; k < n; ++k)
        for (std::uint64_t i = k + 1; i < n; ++i) {
            f += 1;
            for (std::uint64_t j = k + 1; j < n; ++j) f += 2;
        }
    return f;
}

}  // namespace

TEST_CASE("panel_factorize on a permutation and the identity") {
    DenseMatrix p(2, 2);
    p(0, 1) = 1.0;
    p(1, 0) = 1.0;
    const PivotVector piv = panel_factorize(p.ref());
    CHECK(piv == PivotVector{1, 1});
    CHECK(p == DenseMatrix::identity(2));

    DenseMatrix i3 = DenseMatrix::identity(3);
    CHECK(panel_factorize(i3.ref()) == PivotVector{0, 1, 2});
    CHECK(i3 == DenseMatrix::identity(3));
}

TEST_CASE("panel_factorize reconstructs P * panel = L * U") {
    const std::size_t m = 64, nb = 8;
    const DenseMatrix orig = random_matrix(m, nb, 11);
    DenseMatrix f = orig;
    const PivotVector piv = panel_factorize(f.ref());
    for (std::size_t k = 0; k < nb; ++k) CHECK(piv[k] >= k);

    DenseMatrix permuted = orig;
    for (std::size_t k = 0; k < nb; ++k)
        for (std::size_t j = 0; j < nb; ++j) std::swap(permuted(k, j), permuted(piv[k], j));
    DenseMatrix l(m, nb), u(nb, nb);
    for (std::size_t j = 0; j < nb; ++j)
        for (std::size_t i = 0; i < m; ++i) {
            if (i == j) l(i, j) = 1.0;
            if (i > j) l(i, j) = f(i, j);
            if (i <= j && i < nb) u(i, j) = f(i, j);
        }
    const DenseMatrix lu = naive_product(l, u);
    const double tol = 64 * 0x1.0p-52 * max_abs(orig);
    for (std::size_t j = 0; j < nb; ++j)
        for (std::size_t i = 0; i < m; ++i) CHECK(std::fabs(lu(i, j) - permuted(i, j)) <= tol);
    for (std::size_t j = 0; j < nb; ++j)
        for (std::size_t i = j + 1; i < m; ++i) CHECK(std::fabs(l(i, j)) <= 1.0);
}

TEST_CASE("panel_factorize rejects singular panels and bad shapes") {
    DenseMatrix z(4, 2);
    z(0, 0) = 1.0;
    try {
        panel_factorize(z.ref());
        FAIL("expected SingularMatrixError");
    } catch (const SingularMatrixError& e) {
        CHECK(e.index() == 1);
    }
    DenseMatrix wide(2, 3);
    CHECK_THROWS_AS(panel_factorize(wide.ref()), ContractViolation);
}

TEST_CASE("apply_row_swaps") {
    DenseMatrix b = random_matrix(8, 4, 3);
    const DenseMatrix orig = b;
    apply_row_swaps(b.ref(), {});
    CHECK(b == orig);

    DenseMatrix two(2, 3);
    two(0, 0) = 1.0;
    two(1, 2) = 5.0;
    const std::vector<std::size_t> one{1};
    apply_row_swaps(two.ref(), one);
    CHECK(two(1, 0) == 1.0);
    CHECK(two(0, 2) == 5.0);

    const std::vector<std::size_t> piv{3, 3, 2};
    apply_row_swaps(b.ref(), piv);
    // Explicit permutation: apply transpositions to a row index map.
    std::vector<std::size_t> rows{0, 1, 2, 3, 4, 5, 6, 7};
    for (std::size_t k = 0; k < piv.size(); ++k) std::swap(rows[k], rows[piv[k]]);
    for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t j = 0; j < 4; ++j) CHECK(b(i, j) == orig(rows[i], j));

    apply_row_swaps(b.ref(), piv, SwapOrder::Reverse);
    CHECK(b == orig);

    const std::vector<std::size_t> out_of_range{9};
    CHECK_THROWS_AS(apply_row_swaps(b.ref(), out_of_range), ContractViolation);
}

TEST_CASE("trsm_update") {
    DenseMatrix u = random_matrix(4, 5, 4);
    const DenseMatrix orig = u;
    const DenseMatrix eye = DenseMatrix::identity(4);
    trsm_update(eye.cref(), u.ref());
    CHECK(u == orig);

    DenseMatrix l1(1, 1, 42.0);  // diagonal never read
    DenseMatrix u1(1, 3, 2.5);
    trsm_update(l1.cref(), u1.ref());
    CHECK(u1 == DenseMatrix(1, 3, 2.5));

    const std::size_t nb = 8, w = 16;
    DenseMatrix l = random_matrix(nb, nb, 5);
    DenseMatrix rhs = random_matrix(nb, w, 6);
    DenseMatrix x = rhs;
    trsm_update(l.cref(), x.ref());
    DenseMatrix lunit(nb, nb);
    for (std::size_t j = 0; j < nb; ++j)
        for (std::size_t i = j; i < nb; ++i) lunit(i, j) = i == j ? 1.0 : l(i, j);
    const DenseMatrix back = naive_product(lunit, x);
    const double tol = 8 * 0x1.0p-52 * max_abs(rhs);
    for (std::size_t j = 0; j < w; ++j)
        for (std::size_t i = 0; i < nb; ++i) CHECK(std::fabs(back(i, j) - rhs(i, j)) <= tol);
}

TEST_CASE("gemm_update") {
    DenseMatrix c = random_matrix(3, 3, 7);
    const DenseMatrix orig = c;
    const DenseMatrix zero(3, 2);
    const DenseMatrix b = random_matrix(2, 3, 8);
    gemm_update(c.ref(), zero.cref(), b.cref());
    CHECK(c == orig);

    DenseMatrix s(1, 1, 5.0);
    gemm_update(s.ref(), DenseMatrix(1, 1, 2.0).cref(), DenseMatrix(1, 1, 3.0).cref());
    CHECK(s(0, 0) == -1.0);

    DenseMatrix cc = random_matrix(16, 16, 9);
    const DenseMatrix a = random_matrix(16, 4, 10);
    const DenseMatrix bb = random_matrix(4, 16, 11);
    DenseMatrix expect = cc;
    for (std::size_t i = 0; i < 16; ++i)
        for (std::size_t j = 0; j < 16; ++j) {
            double acc = 0.0;
            for (std::size_t l = 0; l < 4; ++l) acc += a(i, l) * bb(l, j);
            expect(i, j) -= acc;
        }
    gemm_update(cc.ref(), a.cref(), bb.cref());
    CHECK(cc == expect);
}

TEST_CASE("lu_factorize solves like an unblocked textbook elimination") {
    const std::size_t n = 48;
    const DenseMatrix a = random_matrix(n, n, 12);
    for (std::size_t nb : {1u, 4u, 8u, 16u, 48u}) {
        DenseMatrix f = a;
        const PivotVector piv = lu_factorize(f.ref(), nb);
        CHECK(piv.size() == n);
        // Blocking does not change the pivots on this matrix.
        DenseMatrix g = a;
        CHECK(lu_factorize(g.ref(), 1) == piv);
        DenseMatrix permuted = a;
        apply_row_swaps(permuted.ref(), piv);
        DenseMatrix l(n, n), u(n, n);
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i < n; ++i) {
                if (i == j) l(i, j) = 1.0;
                if (i > j) l(i, j) = f(i, j);
                if (i <= j) u(i, j) = f(i, j);
            }
        const DenseMatrix lu = naive_product(l, u);
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i < n; ++i) CHECK(std::fabs(lu(i, j) - permuted(i, j)) <= 1e-13);
    }
}

TEST_CASE("lu_blocked_step matches the first step of lu_factorize") {
    const DenseMatrix a = random_matrix(16, 16, 13);
    DenseMatrix stepwise = a;
    PivotVector piv;
    for (std::size_t k = 0; k < 4; ++k) lu_blocked_step(stepwise.ref(), 4, k, piv);
    DenseMatrix whole = a;
    CHECK(lu_factorize(whole.ref(), 4) == piv);
    CHECK(whole == stepwise);
}

TEST_CASE("lu_nopivot examples") {
    const NoPivotFactors id = lu_nopivot(DenseMatrix::identity(4).cref(), 2, PrecisionTag::BF16);
    CHECK(id.precision() == PrecisionTag::BF16);
    CHECK(id.lower() == DenseMatrix::identity(4));
    CHECK(id.upper() == DenseMatrix::identity(4));
    CHECK(id.storage_bytes() == 4 * 4 * 2);

    DenseMatrix d(2, 2);
    d(0, 0) = 2.0;
    d(1, 1) = 4.0;
    const NoPivotFactors df = lu_nopivot(d.cref(), 1, PrecisionTag::FP64);
    CHECK(df.lower() == DenseMatrix::identity(2));
    CHECK(df.upper() == d);

    CHECK_THROWS_AS(lu_nopivot(DenseMatrix(4, 4).cref(), 2, PrecisionTag::FP64), SingularMatrixError);
    CHECK_THROWS_AS(lu_nopivot(DenseMatrix::identity(6).cref(), 4, PrecisionTag::FP64), ContractViolation);
    DenseMatrix huge = DenseMatrix::identity(2);
    huge(0, 0) = 1e300;
    CHECK_THROWS_AS(lu_nopivot(huge.cref(), 1, PrecisionTag::BF16), PrecisionOverflowError);
}

TEST_CASE("lu_nopivot BF16 reconstruction on a diagonally dominant matrix") {
    const std::size_t n = 64;
    DenseMatrix a = random_matrix(n, n, 14);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) s += std::fabs(a(i, j));
        a(i, i) = s + n / 4.0;
    }
    for (PrecisionTag p : {PrecisionTag::BF16, PrecisionTag::FP32, PrecisionTag::FP64}) {
        const NoPivotFactors f = lu_nopivot(a.cref(), 8, p);
        const DenseMatrix lu = naive_product(f.lower(), f.upper());
        double num = 0.0, den = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i < n; ++i) {
                num += (lu(i, j) - a(i, j)) * (lu(i, j) - a(i, j));
                den += a(i, j) * a(i, j);
            }
        const double rel = std::sqrt(num / den);
        CHECK(rel <= (p == PrecisionTag::BF16 ? 0.05 : p == PrecisionTag::FP32 ? 1e-5 : 1e-13));
    }
}

TEST_CASE("flop counts") {
    for (std::uint64_t n : {1u, 2u, 3u, 10u, 37u, 100u}) CHECK(flops::lu(n) == counted_lu_flops(n));
    CHECK(flops::gemm(3, 4, 5) == 120);
    CHECK(flops::trsm(4, 10) == 120);
    // Panel counts plus the updates they feed equal the full count for any blocking.
    for (std::uint64_t n : {64u, 96u})
        for (std::uint64_t nb : {1u, 8u, 16u, 32u}) {
            std::uint64_t total = 0;
            for (std::uint64_t k = 0; k * nb < n; ++k) {
                const std::uint64_t m = n - k * nb;
                total += flops::panel_factorize(m, nb);
                total += flops::trsm(nb, m - nb);
                total += flops::gemm(m - nb, m - nb, nb);
            }
            CHECK(total == flops::lu(n));
        }
}
