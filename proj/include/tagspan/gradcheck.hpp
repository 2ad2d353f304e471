#pragma once

#include <functional>
#include <string>
#include <vector>

#include "tagspan/training.hpp"

namespace tagspan {

struct GradCheckConfig {
  int dim = 8;
  int heads = 2;
  int layers = 2;
  int tokens = 5;
  int entity_types = 2;
  int relation_types = 2;
  int width_dim = 8;
  int max_span_width = 5;
  int neg_spans = 4;
  int neg_relations = 4;
  InteractionMode mode = InteractionMode::full;
  bool label_stream = true;
  double fd_step = 1e-5;
  double tolerance = 1e-4;
  uint64_t seed = 7;
};

struct GradCheckRow {
  std::string group;
  double max_rel_error = 0.0;
  bool pass = true;
};

struct GradCheckReport {
  std::vector<GradCheckRow> rows;
  double max_rel_error = 0.0;
  bool pass = true;
};

// Sum of the (already batch-normalized) per-document losses; forward only.
double batch_loss_value(const Model& model, const std::vector<Model::DocTargets>& batch);

// Analytic gradients of the joint loss vs central finite differences, per
// parameter group. `mutate` (test hook) can tamper with the analytic
// gradients before the comparison.
GradCheckReport compare_gradients(Model& model, const std::vector<Model::DocTargets>& batch,
                                  double fd_step, double tolerance,
                                  const std::function<void(ParamStore&)>& mutate = {});

// Builds the small synthetic instance described by the config and runs the
// comparison end to end.
GradCheckReport check_gradients(const GradCheckConfig& cfg);

}  // namespace tagspan
