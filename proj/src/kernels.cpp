#include "tagspan/kernels.hpp"

#include <cassert>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tagspan::kernels {

namespace {

// Below this many multiply-adds the fork/join overhead dominates.
constexpr long kParallelGrain = 1 << 15;

inline void matmul_row(const Matrix& a, const Matrix& b, Matrix& out, int i) {
  const int k = a.cols();
  const int n = b.cols();
  const double* arow = a.row(i);
  double* orow = out.row(i);
  for (int j = 0; j < n; ++j) orow[j] = 0.0;
  for (int p = 0; p < k; ++p) {
    const double av = arow[p];
    const double* brow = b.row(p);
    for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
  }
}

inline void matmul_nt_row(const Matrix& a, const Matrix& b, Matrix& out, int i) {
  const int k = a.cols();
  const int n = b.rows();
  const double* arow = a.row(i);
  double* orow = out.row(i);
  for (int j = 0; j < n; ++j) {
    const double* brow = b.row(j);
    double s = 0.0;
    for (int p = 0; p < k; ++p) s += arow[p] * brow[p];
    orow[j] = s;
  }
}

inline void matmul_tn_row(const Matrix& a, const Matrix& b, Matrix& out, int i) {
  // out(i, j) = sum_p a(p, i) * b(p, j)
  const int m = a.rows();
  const int n = b.cols();
  double* orow = out.row(i);
  for (int j = 0; j < n; ++j) orow[j] = 0.0;
  for (int p = 0; p < m; ++p) {
    const double av = a(p, i);
    const double* brow = b.row(p);
    for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
  }
}

inline void softmax_row(Matrix& m, int i) {
  const int n = m.cols();
  double* row = m.row(i);
  double mx = row[0];
  for (int j = 1; j < n; ++j) mx = std::max(mx, row[j]);
  double sum = 0.0;
  for (int j = 0; j < n; ++j) {
    row[j] = std::exp(row[j] - mx);
    sum += row[j];
  }
  for (int j = 0; j < n; ++j) row[j] /= sum;
}

}  // namespace

void matmul(const Matrix& a, const Matrix& b, Matrix& out) {
  assert(a.cols() == b.rows());
  out.resize(a.rows(), b.cols());
  const int m = a.rows();
  const long work = static_cast<long>(m) * a.cols() * b.cols();
#ifdef _OPENMP
  if (work >= kParallelGrain) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) matmul_row(a, b, out, i);
    return;
  }
#endif
  (void)work;
  for (int i = 0; i < m; ++i) matmul_row(a, b, out, i);
}

void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out) {
  assert(a.cols() == b.cols());
  out.resize(a.rows(), b.rows());
  const int m = a.rows();
  const long work = static_cast<long>(m) * a.cols() * b.rows();
#ifdef _OPENMP
  if (work >= kParallelGrain) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) matmul_nt_row(a, b, out, i);
    return;
  }
#endif
  (void)work;
  for (int i = 0; i < m; ++i) matmul_nt_row(a, b, out, i);
}

void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out) {
  assert(a.rows() == b.rows());
  out.resize(a.cols(), b.cols());
  const int m = a.cols();
  const long work = static_cast<long>(m) * a.rows() * b.cols();
#ifdef _OPENMP
  if (work >= kParallelGrain) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) matmul_tn_row(a, b, out, i);
    return;
  }
#endif
  (void)work;
  for (int i = 0; i < m; ++i) matmul_tn_row(a, b, out, i);
}

void softmax_rows(Matrix& m) {
  if (m.cols() == 0) return;
  const int rows = m.rows();
  const long work = static_cast<long>(rows) * m.cols();
#ifdef _OPENMP
  if (work >= kParallelGrain) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < rows; ++i) softmax_row(m, i);
    return;
  }
#endif
  (void)work;
  for (int i = 0; i < rows; ++i) softmax_row(m, i);
}

}  // namespace tagspan::kernels
