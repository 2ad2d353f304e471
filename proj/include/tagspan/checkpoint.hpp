#pragma once

#include <string>

#include "tagspan/model.hpp"
#include "tagspan/training.hpp"

namespace tagspan {

// Single JSON file: a header with the training configuration plus a flat
// parameter-path -> (shape, row-major float64 array) map. Doubles are written
// with round-trip precision, so save/load is exact.
void save_checkpoint(const std::string& path, const Model& model, const TrainConfig& cfg);

Model load_checkpoint(const std::string& path, TrainConfig* train_cfg = nullptr);

}  // namespace tagspan
