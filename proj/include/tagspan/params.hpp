#pragma once

#include <string>
#include <vector>

#include "tagspan/matrix.hpp"
#include "tagspan/rng.hpp"

namespace tagspan {

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  bool weight_decay = true;  // biases and layer-norm affines opt out
};

class ParamStore {
 public:
  // Uniform in [-a, a] with a = sqrt(6 / (fan_in + fan_out)).
  int add_weight(const std::string& name, int rows, int cols, Rng& rng);
  // Zeros (biases) or a constant (layer-norm gain = 1). Not weight-decayed.
  int add_bias(const std::string& name, int cols, double fill = 0.0);

  Parameter& operator[](int id) { return params_[id]; }
  const Parameter& operator[](int id) const { return params_[id]; }
  int size() const { return static_cast<int>(params_.size()); }
  int find(const std::string& name) const;  // -1 if absent

  void zero_grad();

 private:
  std::vector<Parameter> params_;
};

}  // namespace tagspan
