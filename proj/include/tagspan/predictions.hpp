#pragma once

#include <string>
#include <vector>

#include "tagspan/eval.hpp"
#include "tagspan/model.hpp"

namespace tagspan {

struct PredictedEntity {
  std::string type;
  int start = 0;
  int end = 0;
  double score = 0.0;
};

struct PredictedRelation {
  std::string type;
  std::pair<int, int> head_span;
  std::pair<int, int> tail_span;
  double score = 0.0;
};

struct DocPrediction {
  std::vector<PredictedEntity> entities;
  std::vector<PredictedRelation> relations;
};

// Resolves type indices to schema names.
DocPrediction to_doc_prediction(const Model::Prediction& pred, const TypeSchema& schema);

// Relation argument types come from the predicted entity at the same span
// (unknown if the span is not among the predicted entities).
DocRecords records_from_prediction(const DocPrediction& pred, int token_count);

std::string predictions_to_json_text(const std::vector<DocPrediction>& docs);
std::vector<DocPrediction> predictions_from_json_text(const std::string& text);
std::vector<DocPrediction> load_predictions(const std::string& path);
void save_predictions(const std::string& path, const std::vector<DocPrediction>& docs);

}  // namespace tagspan
