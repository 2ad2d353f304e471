#include "tagspan/kernels.hpp"

#include <cassert>
#include <cmath>

namespace tagspan::kernels::ref {

void matmul(const Matrix& a, const Matrix& b, Matrix& out) {
  assert(a.cols() == b.rows());
  out.resize(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (int p = 0; p < a.cols(); ++p) s += a(i, p) * b(p, j);
      out(i, j) = s;
    }
}

void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out) {
  assert(a.cols() == b.cols());
  out.resize(a.rows(), b.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (int p = 0; p < a.cols(); ++p) s += a(i, p) * b(j, p);
      out(i, j) = s;
    }
}

void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out) {
  assert(a.rows() == b.rows());
  out.resize(a.cols(), b.cols());
  for (int i = 0; i < a.cols(); ++i)
    for (int j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (int p = 0; p < a.rows(); ++p) s += a(p, i) * b(p, j);
      out(i, j) = s;
    }
}

void softmax_rows(Matrix& m) {
  for (int i = 0; i < m.rows(); ++i) {
    if (m.cols() == 0) return;
    double mx = m(i, 0);
    for (int j = 1; j < m.cols(); ++j) mx = std::max(mx, m(i, j));
    double sum = 0.0;
    for (int j = 0; j < m.cols(); ++j) {
      m(i, j) = std::exp(m(i, j) - mx);
      sum += m(i, j);
    }
    for (int j = 0; j < m.cols(); ++j) m(i, j) /= sum;
  }
}

}  // namespace tagspan::kernels::ref
