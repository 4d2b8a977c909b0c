#pragma once

#include <cstddef>

namespace msrnn::kernels {

// Strided GEMM helpers. All matrices are row-major with explicit leading
// dimensions so column blocks of fused gate matrices can be addressed in place.
// When accumulate is false, C is overwritten.

// C[m,n] (+)= A[m,k] * B[k,n]
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
             const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate);

// C[m,n] (+)= A[k,m]^T * B[k,n]
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
             const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate);

// C[m,n] (+)= A[m,k] * B[n,k]^T. Transposes B into scratch, then gemm_nn.
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
             const double* b, std::size_t ldb, double* c, std::size_t ldc, bool accumulate);

// out[n] += column sums of A[m,n]
void add_column_sums(std::size_t m, std::size_t n, const double* a, std::size_t lda, double* out);

}  // namespace msrnn::kernels
