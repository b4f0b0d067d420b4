#pragma once

#include "exakit/matrix.hpp"
#include "exakit/precision.hpp"

namespace exakit {

/// C <- alpha * A * B + beta * C with BF16 inputs and FP32 accumulation.
///
/// Products of two BF16 values are exact in FP32; the sum for each C(i,j)
/// runs over k in ascending order, so results are bit-reproducible. When
/// beta == 0, C is not read (NaN in C does not propagate).
void bf16_gemm(ConstMatrixRef<Bf16> a, ConstMatrixRef<Bf16> b, MatrixRef<float> c,
               float alpha, float beta);

Matrix<Bf16> to_bf16(ConstMatrixRef<double> m);
DenseMatrix widen(ConstMatrixRef<Bf16> m);

}  // namespace exakit
