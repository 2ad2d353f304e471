#pragma once

#include "tagspan/matrix.hpp"

namespace tagspan::kernels {

// Production kernels. Parallelized over output rows with OpenMP when the
// work is large enough; each output element is computed by the same serial
// inner loop either way, so results are bit-identical for any thread count.

// out = a * b
void matmul(const Matrix& a, const Matrix& b, Matrix& out);
// out = a * b^T
void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out);
// out = a^T * b
void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out);
// row-wise softmax, in place
void softmax_rows(Matrix& m);

namespace ref {
// Plain serial implementations, kept as the reference the parallel kernels
// are tested and benchmarked against.
void matmul(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out);
void softmax_rows(Matrix& m);
}  // namespace ref

}  // namespace tagspan::kernels
