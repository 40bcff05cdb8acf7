#pragma once

#include <cstddef>

namespace lcs::detail {

// C[m x n] = alpha * op(A) * op(B) + beta * C, row-major.
// Backed by CBLAS when built with LCS_USE_CBLAS, otherwise a plain loop.
void gemm(bool trans_a, bool trans_b, int m, int n, int k, float alpha, const float* a, int lda,
          const float* b, int ldb, float beta, float* c, int ldc);
void gemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha, const double* a, int lda,
          const double* b, int ldb, double beta, double* c, int ldc);

// Pins the BLAS backend to one thread so results stay bitwise reproducible.
void pin_blas_threads();

}  // namespace lcs::detail
