// Times the OpenMP kernels against the serial reference implementations.
#include <chrono>
#include <cstdio>
#include <functional>

#include "tagspan/kernels.hpp"
#include "tagspan/rng.hpp"

using tagspan::Matrix;

namespace {

Matrix random_matrix(int rows, int cols, tagspan::Rng& rng) {
  Matrix m(rows, cols);
  for (size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.next_symmetric(1.0);
  return m;
}

double time_ms(const std::function<void()>& fn, int reps) {
  fn();  // warm up
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

}  // namespace

int main() {
  tagspan::Rng rng(12345);
  std::printf("%-14s %8s %12s %12s %9s\n", "kernel", "size", "serial(ms)", "openmp(ms)", "speedup");
  for (const int n : {64, 128, 256, 512}) {
    const Matrix a = random_matrix(n, n, rng);
    const Matrix b = random_matrix(n, n, rng);
    Matrix out;
    const int reps = n <= 128 ? 50 : 10;

    const double serial = time_ms([&] { tagspan::kernels::ref::matmul(a, b, out); }, reps);
    const double parallel = time_ms([&] { tagspan::kernels::matmul(a, b, out); }, reps);
    std::printf("%-14s %4dx%-4d %12.3f %12.3f %8.2fx\n", "matmul", n, n, serial, parallel,
                serial / parallel);

    const double serial_nt = time_ms([&] { tagspan::kernels::ref::matmul_nt(a, b, out); }, reps);
    const double parallel_nt = time_ms([&] { tagspan::kernels::matmul_nt(a, b, out); }, reps);
    std::printf("%-14s %4dx%-4d %12.3f %12.3f %8.2fx\n", "matmul_nt", n, n, serial_nt, parallel_nt,
                serial_nt / parallel_nt);

    const double serial_tn = time_ms([&] { tagspan::kernels::ref::matmul_tn(a, b, out); }, reps);
    const double parallel_tn = time_ms([&] { tagspan::kernels::matmul_tn(a, b, out); }, reps);
    std::printf("%-14s %4dx%-4d %12.3f %12.3f %8.2fx\n", "matmul_tn", n, n, serial_tn, parallel_tn,
                serial_tn / parallel_tn);

    Matrix s1 = random_matrix(n, n, rng);
    Matrix s2 = s1;
    const double serial_sm = time_ms([&] { tagspan::kernels::ref::softmax_rows(s1); }, reps);
    const double parallel_sm = time_ms([&] { tagspan::kernels::softmax_rows(s2); }, reps);
    std::printf("%-14s %4dx%-4d %12.3f %12.3f %8.2fx\n", "softmax_rows", n, n, serial_sm, parallel_sm,
                serial_sm / parallel_sm);
  }
  return 0;
}
