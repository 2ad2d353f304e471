#include "tagspan/autodiff.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

#include "tagspan/kernels.hpp"

namespace tagspan {

namespace {

inline double clamp_prob(double p, double eps) { return std::min(std::max(p, eps), 1.0 - eps); }

}  // namespace

int Tape::push(Matrix value, std::function<void(Tape&, int)> back) {
  nodes_.push_back(Node{std::move(value), Matrix(), std::move(back)});
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::leaf(Matrix value) { return push(std::move(value), {}); }

int Tape::matmul(int a, int b) {
  Matrix out;
  kernels::matmul(value(a), value(b), out);
  return push(std::move(out), [a, b](Tape& t, int self) {
    Matrix tmp;
    kernels::matmul_nt(t.nodes_[self].grad, t.value(b), tmp);
    for (size_t i = 0; i < tmp.size(); ++i) t.nodes_[a].grad.data()[i] += tmp.data()[i];
    kernels::matmul_tn(t.value(a), t.nodes_[self].grad, tmp);
    for (size_t i = 0; i < tmp.size(); ++i) t.nodes_[b].grad.data()[i] += tmp.data()[i];
  });
}

int Tape::matmul_nt(int a, int b) {
  Matrix out;
  kernels::matmul_nt(value(a), value(b), out);
  return push(std::move(out), [a, b](Tape& t, int self) {
    Matrix tmp;
    kernels::matmul(t.nodes_[self].grad, t.value(b), tmp);
    for (size_t i = 0; i < tmp.size(); ++i) t.nodes_[a].grad.data()[i] += tmp.data()[i];
    kernels::matmul_tn(t.nodes_[self].grad, t.value(a), tmp);
    for (size_t i = 0; i < tmp.size(); ++i) t.nodes_[b].grad.data()[i] += tmp.data()[i];
  });
}

int Tape::add(int a, int b) {
  assert(value(a).same_shape(value(b)));
  Matrix out = value(a);
  const Matrix& vb = value(b);
  for (size_t i = 0; i < out.size(); ++i) out.data()[i] += vb.data()[i];
  return push(std::move(out), [a, b](Tape& t, int self) {
    const Matrix& g = t.nodes_[self].grad;
    for (size_t i = 0; i < g.size(); ++i) {
      t.nodes_[a].grad.data()[i] += g.data()[i];
      t.nodes_[b].grad.data()[i] += g.data()[i];
    }
  });
}

int Tape::add_row(int a, int bias) {
  const Matrix& va = value(a);
  const Matrix& vb = value(bias);
  assert(vb.rows() == 1 && vb.cols() == va.cols());
  Matrix out = va;
  for (int i = 0; i < out.rows(); ++i)
    for (int j = 0; j < out.cols(); ++j) out(i, j) += vb(0, j);
  return push(std::move(out), [a, bias](Tape& t, int self) {
    const Matrix& g = t.nodes_[self].grad;
    Matrix& ga = t.nodes_[a].grad;
    Matrix& gb = t.nodes_[bias].grad;
    for (int i = 0; i < g.rows(); ++i)
      for (int j = 0; j < g.cols(); ++j) {
        ga(i, j) += g(i, j);
        gb(0, j) += g(i, j);
      }
  });
}

int Tape::scale(int a, double s) {
  Matrix out = value(a);
  for (size_t i = 0; i < out.size(); ++i) out.data()[i] *= s;
  return push(std::move(out), [a, s](Tape& t, int self) {
    const Matrix& g = t.nodes_[self].grad;
    for (size_t i = 0; i < g.size(); ++i) t.nodes_[a].grad.data()[i] += s * g.data()[i];
  });
}

int Tape::concat_cols(const std::vector<int>& parts) {
  assert(!parts.empty());
  const int rows = value(parts[0]).rows();
  int cols = 0;
  for (int p : parts) {
    assert(value(p).rows() == rows);
    cols += value(p).cols();
  }
  Matrix out(rows, cols);
  int off = 0;
  for (int p : parts) {
    const Matrix& v = value(p);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < v.cols(); ++j) out(i, off + j) = v(i, j);
    off += v.cols();
  }
  return push(std::move(out), [parts](Tape& t, int self) {
    const Matrix& g = t.nodes_[self].grad;
    int off = 0;
    for (int p : parts) {
      Matrix& gp = t.nodes_[p].grad;
      for (int i = 0; i < gp.rows(); ++i)
        for (int j = 0; j < gp.cols(); ++j) gp(i, j) += g(i, off + j);
      off += gp.cols();
    }
  });
}

int Tape::slice_cols(int a, int c0, int c1) {
  const Matrix& va = value(a);
  assert(0 <= c0 && c0 <= c1 && c1 <= va.cols());
  Matrix out(va.rows(), c1 - c0);
  for (int i = 0; i < out.rows(); ++i)
    for (int j = 0; j < out.cols(); ++j) out(i, j) = va(i, c0 + j);
  return push(std::move(out), [a, c0](Tape& t, int self) {
    const Matrix& g = t.nodes_[self].grad;
    Matrix& ga = t.nodes_[a].grad;
    for (int i = 0; i < g.rows(); ++i)
      for (int j = 0; j < g.cols(); ++j) ga(i, c0 + j) += g(i, j);
  });
}

int Tape::relu(int a) {
  Matrix out = value(a);
  for (size_t i = 0; i < out.size(); ++i) out.data()[i] = std::max(0.0, out.data()[i]);
  return push(std::move(out), [a](Tape& t, int self) {
    const Matrix& g = t.nodes_[self].grad;
    const Matrix& x = t.value(a);
    Matrix& ga = t.nodes_[a].grad;
    for (size_t i = 0; i < g.size(); ++i)
      if (x.data()[i] > 0.0) ga.data()[i] += g.data()[i];
  });
}

int Tape::sigmoid(int a) {
  Matrix out = value(a);
  for (size_t i = 0; i < out.size(); ++i) out.data()[i] = 1.0 / (1.0 + std::exp(-out.data()[i]));
  return push(std::move(out), [a](Tape& t, int self) {
    const Matrix& g = t.nodes_[self].grad;
    const Matrix& y = t.nodes_[self].value;
    Matrix& ga = t.nodes_[a].grad;
    for (size_t i = 0; i < g.size(); ++i) {
      const double yv = y.data()[i];
      ga.data()[i] += g.data()[i] * yv * (1.0 - yv);
    }
  });
}

int Tape::softmax_rows(int a) {
  if (!value(a).all_finite()) throw std::domain_error("softmax: non-finite input");
  Matrix out = value(a);
  kernels::softmax_rows(out);
  return push(std::move(out), [a](Tape& t, int self) {
    const Matrix& g = t.nodes_[self].grad;
    const Matrix& y = t.nodes_[self].value;
    Matrix& ga = t.nodes_[a].grad;
    for (int i = 0; i < g.rows(); ++i) {
      double dot = 0.0;
      for (int j = 0; j < g.cols(); ++j) dot += g(i, j) * y(i, j);
      for (int j = 0; j < g.cols(); ++j) ga(i, j) += y(i, j) * (g(i, j) - dot);
    }
  });
}

int Tape::normalize_rows(int a, double eps) {
  const Matrix& x = value(a);
  const int d = x.cols();
  Matrix out(x.rows(), d);
  std::vector<double> inv_std(x.rows());
  for (int i = 0; i < x.rows(); ++i) {
    double mean = 0.0;
    for (int j = 0; j < d; ++j) mean += x(i, j);
    mean /= d;
    double var = 0.0;
    for (int j = 0; j < d; ++j) {
      const double c = x(i, j) - mean;
      var += c * c;
    }
    var /= d;
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (int j = 0; j < d; ++j) out(i, j) = (x(i, j) - mean) * inv_std[i];
  }
  return push(std::move(out), [a, inv_std = std::move(inv_std)](Tape& t, int self) {
    const Matrix& g = t.nodes_[self].grad;
    const Matrix& y = t.nodes_[self].value;
    Matrix& ga = t.nodes_[a].grad;
    const int d = g.cols();
    for (int i = 0; i < g.rows(); ++i) {
      double gmean = 0.0, gymean = 0.0;
      for (int j = 0; j < d; ++j) {
        gmean += g(i, j);
        gymean += g(i, j) * y(i, j);
      }
      gmean /= d;
      gymean /= d;
      for (int j = 0; j < d; ++j) ga(i, j) += inv_std[i] * (g(i, j) - gmean - y(i, j) * gymean);
    }
  });
}

int Tape::affine_rows(int x, int gain, int shift) {
  const Matrix& vx = value(x);
  const Matrix& vg = value(gain);
  const Matrix& vs = value(shift);
  assert(vg.rows() == 1 && vs.rows() == 1 && vg.cols() == vx.cols() && vs.cols() == vx.cols());
  Matrix out(vx.rows(), vx.cols());
  for (int i = 0; i < vx.rows(); ++i)
    for (int j = 0; j < vx.cols(); ++j) out(i, j) = vx(i, j) * vg(0, j) + vs(0, j);
  return push(std::move(out), [x, gain, shift](Tape& t, int self) {
    const Matrix& g = t.nodes_[self].grad;
    const Matrix& vx = t.value(x);
    const Matrix& vg = t.value(gain);
    Matrix& gx = t.nodes_[x].grad;
    Matrix& ggain = t.nodes_[gain].grad;
    Matrix& gshift = t.nodes_[shift].grad;
    for (int i = 0; i < g.rows(); ++i)
      for (int j = 0; j < g.cols(); ++j) {
        gx(i, j) += g(i, j) * vg(0, j);
        ggain(0, j) += g(i, j) * vx(i, j);
        gshift(0, j) += g(i, j);
      }
  });
}

int Tape::gather_rows(int a, std::vector<int> rows) {
  const Matrix& va = value(a);
  Matrix out(static_cast<int>(rows.size()), va.cols());
  for (size_t r = 0; r < rows.size(); ++r) {
    assert(rows[r] >= 0 && rows[r] < va.rows());
    for (int j = 0; j < va.cols(); ++j) out(static_cast<int>(r), j) = va(rows[r], j);
  }
  return push(std::move(out), [a, rows = std::move(rows)](Tape& t, int self) {
    const Matrix& g = t.nodes_[self].grad;
    Matrix& ga = t.nodes_[a].grad;
    for (size_t r = 0; r < rows.size(); ++r)
      for (int j = 0; j < g.cols(); ++j) ga(rows[r], j) += g(static_cast<int>(r), j);
  });
}

int Tape::max_pool_ranges(int a, std::vector<std::pair<int, int>> ranges) {
  const Matrix& va = value(a);
  const int cols = va.cols();
  Matrix out(static_cast<int>(ranges.size()), cols);
  // argmax row per output cell; -1 marks an empty range
  std::vector<int> arg(ranges.size() * static_cast<size_t>(cols), -1);
  for (size_t r = 0; r < ranges.size(); ++r) {
    auto [first, last] = ranges[r];
    assert(first >= 0 && last <= va.rows());
    if (first >= last) continue;
    for (int j = 0; j < cols; ++j) {
      int best = first;
      for (int i = first + 1; i < last; ++i)
        if (va(i, j) > va(best, j)) best = i;
      out(static_cast<int>(r), j) = va(best, j);
      arg[r * cols + j] = best;
    }
  }
  return push(std::move(out), [a, cols, arg = std::move(arg)](Tape& t, int self) {
    const Matrix& g = t.nodes_[self].grad;
    Matrix& ga = t.nodes_[a].grad;
    for (int r = 0; r < g.rows(); ++r)
      for (int j = 0; j < cols; ++j) {
        const int src = arg[static_cast<size_t>(r) * cols + j];
        if (src >= 0) ga(src, j) += g(r, j);
      }
  });
}

int Tape::cross_entropy_sum(int probs, std::vector<int> gold, double clamp_eps) {
  const Matrix& p = value(probs);
  assert(static_cast<int>(gold.size()) == p.rows());
  double total = 0.0;
  for (int i = 0; i < p.rows(); ++i) {
    assert(gold[i] >= 0 && gold[i] < p.cols());
    total -= std::log(clamp_prob(p(i, gold[i]), clamp_eps));
  }
  Matrix out(1, 1);
  out(0, 0) = total;
  return push(std::move(out), [probs, gold = std::move(gold), clamp_eps](Tape& t, int self) {
    const double seed = t.nodes_[self].grad(0, 0);
    const Matrix& p = t.value(probs);
    Matrix& gp = t.nodes_[probs].grad;
    for (size_t i = 0; i < gold.size(); ++i) {
      const double pv = p(static_cast<int>(i), gold[i]);
      if (pv > clamp_eps && pv < 1.0 - clamp_eps)
        gp(static_cast<int>(i), gold[i]) -= seed / pv;
    }
  });
}

int Tape::bce_sum(int scores, Matrix targets, double clamp_eps) {
  const Matrix& s = value(scores);
  assert(s.same_shape(targets));
  double total = 0.0;
  for (size_t i = 0; i < s.size(); ++i) {
    const double c = clamp_prob(s.data()[i], clamp_eps);
    const double y = targets.data()[i];
    total -= y * std::log(c) + (1.0 - y) * std::log(1.0 - c);
  }
  Matrix out(1, 1);
  out(0, 0) = total;
  return push(std::move(out), [scores, targets = std::move(targets), clamp_eps](Tape& t, int self) {
    const double seed = t.nodes_[self].grad(0, 0);
    const Matrix& s = t.value(scores);
    Matrix& gs = t.nodes_[scores].grad;
    for (size_t i = 0; i < s.size(); ++i) {
      const double sv = s.data()[i];
      if (sv > clamp_eps && sv < 1.0 - clamp_eps) {
        const double y = targets.data()[i];
        gs.data()[i] += seed * (-y / sv + (1.0 - y) / (1.0 - sv));
      }
    }
  });
}

void Tape::backward(int root) {
  assert(value(root).rows() == 1 && value(root).cols() == 1);
  for (auto& n : nodes_) {
    n.grad.resize(n.value.rows(), n.value.cols());
  }
  nodes_[root].grad(0, 0) = 1.0;
  for (int id = root; id >= 0; --id) {
    if (nodes_[id].back) nodes_[id].back(*this, id);
  }
}

}  // namespace tagspan
