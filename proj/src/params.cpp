#include "tagspan/params.hpp"

#include <cmath>
#include <stdexcept>

namespace tagspan {

int ParamStore::add_weight(const std::string& name, int rows, int cols, Rng& rng) {
  if (find(name) >= 0) throw std::logic_error("duplicate parameter name: " + name);
  Parameter p;
  p.name = name;
  p.value.resize(rows, cols);
  const double a = std::sqrt(6.0 / (rows + cols));
  for (size_t i = 0; i < p.value.size(); ++i) p.value.data()[i] = rng.next_symmetric(a);
  p.grad.resize(rows, cols);
  p.weight_decay = true;
  params_.push_back(std::move(p));
  return static_cast<int>(params_.size()) - 1;
}

int ParamStore::add_bias(const std::string& name, int cols, double fill) {
  if (find(name) >= 0) throw std::logic_error("duplicate parameter name: " + name);
  Parameter p;
  p.name = name;
  p.value.resize(1, cols);
  if (fill != 0.0) p.value.fill(fill);
  p.grad.resize(1, cols);
  p.weight_decay = false;
  params_.push_back(std::move(p));
  return static_cast<int>(params_.size()) - 1;
}

int ParamStore::find(const std::string& name) const {
  for (size_t i = 0; i < params_.size(); ++i)
    if (params_[i].name == name) return static_cast<int>(i);
  return -1;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p.grad.fill(0.0);
}

}  // namespace tagspan
