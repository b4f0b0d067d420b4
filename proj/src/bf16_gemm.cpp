#include "exakit/bf16_gemm.hpp"

#include <algorithm>
#include <vector>

namespace exakit {

void bf16_gemm(ConstMatrixRef<Bf16> a, ConstMatrixRef<Bf16> b, MatrixRef<float> c,
               float alpha, float beta) {
    if (a.cols != b.rows || a.rows != c.rows || b.cols != c.cols) {
        throw ContractViolation("bf16_gemm: dimension mismatch");
    }
    const std::size_t m = a.rows;
    const std::size_t k = a.cols;
    std::vector<float> acc(m);
    std::vector<float> a_col(m);
    for (std::size_t j = 0; j < c.cols; ++j) {
        std::fill(acc.begin(), acc.end(), 0.0f);
        for (std::size_t l = 0; l < k; ++l) {
            const float blj = b(l, j).to_float();
            for (std::size_t i = 0; i < m; ++i) a_col[i] = a(i, l).to_float();
            for (std::size_t i = 0; i < m; ++i) acc[i] += a_col[i] * blj;
        }
        for (std::size_t i = 0; i < m; ++i) {
            c(i, j) = beta == 0.0f ? alpha * acc[i] : alpha * acc[i] + beta * c(i, j);
        }
    }
}

Matrix<Bf16> to_bf16(ConstMatrixRef<double> m) {
    Matrix<Bf16> out(m.rows, m.cols);
    for (std::size_t j = 0; j < m.cols; ++j)
        for (std::size_t i = 0; i < m.rows; ++i) out(i, j) = round_to_bf16(m(i, j));
    return out;
}

DenseMatrix widen(ConstMatrixRef<Bf16> m) {
    DenseMatrix out(m.rows, m.cols);
    for (std::size_t j = 0; j < m.cols; ++j)
        for (std::size_t i = 0; i < m.rows; ++i) out(i, j) = m(i, j).to_double();
    return out;
}

}  // namespace exakit
