#pragma once

#include <deque>
#include <functional>
#include <utility>
#include <vector>

#include "tagspan/matrix.hpp"

namespace tagspan {

// Reverse-mode tape over matrices. Operations append nodes in topological
// order; backward() walks the tape once in reverse. Handles are plain ints
// (indices into the tape); a document's whole graph lives in one Tape and
// dies with it.
class Tape {
 public:
  int leaf(Matrix value);

  const Matrix& value(int id) const { return nodes_[id].value; }
  const Matrix& grad(int id) const { return nodes_[id].grad; }
  int size() const { return static_cast<int>(nodes_.size()); }

  // out = a * b
  int matmul(int a, int b);
  // out = a * b^T
  int matmul_nt(int a, int b);
  // element-wise sum, same shape
  int add(int a, int b);
  // broadcast a 1 x c bias over the rows of a
  int add_row(int a, int bias);
  int scale(int a, double s);
  int concat_cols(const std::vector<int>& parts);
  int slice_cols(int a, int c0, int c1);
  int relu(int a);
  int sigmoid(int a);
  int softmax_rows(int a);
  // per-row standardization to mean 0, variance 1 (population variance, eps
  // inside the square root); the affine scale/shift is a separate node so the
  // pre-affine rows stay observable on the tape
  int normalize_rows(int a, double eps);
  // y = x .* gain + shift with 1 x c gain and shift broadcast over rows
  int affine_rows(int x, int gain, int shift);
  int gather_rows(int a, std::vector<int> rows);
  // out row r = element-wise max of a's rows in [first, last); an empty
  // range produces a zero row
  int max_pool_ranges(int a, std::vector<std::pair<int, int>> ranges);
  // sum over rows i of -log(clamp(probs(i, gold[i])))
  int cross_entropy_sum(int probs, std::vector<int> gold, double clamp_eps);
  // sum over all cells of -[y log c + (1-y) log(1-c)] with c = clamp(scores)
  int bce_sum(int scores, Matrix targets, double clamp_eps);

  // Accumulates gradients of `root` (a 1 x 1 node) into every node.
  void backward(int root);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void(Tape&, int)> back;  // empty for leaves
  };

  int push(Matrix value, std::function<void(Tape&, int)> back);

  // deque: node references stay valid while later ops append
  std::deque<Node> nodes_;
};

}  // namespace tagspan
