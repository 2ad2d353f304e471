#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tagspan/data.hpp"
#include "tagspan/encoder.hpp"
#include "tagspan/heads.hpp"
#include "tagspan/tagging.hpp"

namespace tagspan {

struct ModelConfig {
  EncoderConfig encoder;
  int width_dim = 150;
  int max_span_width = 10;
  double alpha = 0.4;
  // When false, the stacked layers and the tagging head are absent and the
  // span/relation heads read the projected embeddings directly.
  bool label_stream = true;
  double clamp_eps = 1e-12;
  uint64_t init_seed = 1;
};

class Model {
 public:
  Model(ModelConfig cfg, TypeSchema schema, LabelVocabulary vocab);

  const ModelConfig& config() const { return cfg_; }
  const TypeSchema& schema() const { return schema_; }
  const LabelVocabulary& vocab() const { return vocab_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }
  const HeadParams& head_params() const { return heads_; }

  // The three stream matrices after the stack (or the two projections in
  // no-label mode, with label == -1).
  StreamNodes streams(Tape& t, ParamBinder& bind, const Matrix& embeddings,
                      EncoderTrace* trace = nullptr) const;

  struct Prediction {
    TokenLabelSequence tags;  // empty without a label stream
    std::vector<SpanPrediction> entities;
    std::vector<RelationPrediction> relations;
  };
  Prediction predict(const Matrix& embeddings) const;

  // Everything one document contributes to a training step.
  struct DocTargets {
    Matrix embeddings;
    std::vector<int> tag_gold;  // one vocabulary index per token
    std::vector<SpanCandidate> spans;
    std::vector<int> span_classes;  // entity type index, or entity_type_count for none
    std::vector<std::pair<SpanCandidate, SpanCandidate>> pairs;
    Matrix pair_labels;  // pairs x relation types, multi-hot

    long tag_instances() const { return static_cast<long>(tag_gold.size()); }
    long span_instances() const { return static_cast<long>(spans.size()); }
    long pair_instances() const { return static_cast<long>(pairs.size()); }
  };
  DocTargets make_targets(const AnnotatedDocument& doc, Matrix embeddings, int span_quota,
                          int pair_quota, uint64_t seed,
                          std::vector<std::string>* warnings = nullptr) const;

  struct LossNodes {
    int total = -1;  // per-document contribution, already scaled by the batch denominators
    double tag_sum = 0.0;
    double span_sum = 0.0;
    double rel_sum = 0.0;
  };
  // inv_* are the reciprocal batch instance counts (0 disables a term).
  LossNodes training_loss(Tape& t, ParamBinder& bind, const DocTargets& doc, double inv_tags,
                          double inv_spans, double inv_pairs, EncoderTrace* trace = nullptr) const;

 private:
  ModelConfig cfg_;
  TypeSchema schema_;
  LabelVocabulary vocab_;
  ParamStore store_;
  EncoderParams encoder_;
  HeadParams heads_;
};

InteractionMode interaction_mode_from_string(const std::string& name);
std::string to_string(InteractionMode mode);

}  // namespace tagspan
