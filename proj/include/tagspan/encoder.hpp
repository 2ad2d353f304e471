#pragma once

#include <vector>

#include "tagspan/autodiff.hpp"
#include "tagspan/params.hpp"

namespace tagspan {

// Wiring of the label-stream attention unit. The label stream normally
// attends to the fused entity+relation streams; the ablations reroute or
// sever that flow.
enum class InteractionMode { full, no_re_to_ner, no_ner_to_re, none };

struct EncoderConfig {
  int layers = 3;
  int heads = 8;
  int dim = 64;
  InteractionMode mode = InteractionMode::full;
  // Small enough that the normalized rows stay within 1e-5 of unit variance
  // even when the raw row variance is well below 1.
  double layer_norm_eps = 1e-8;
};

// Lazily places parameters on a tape as leaves (once each per forward pass)
// and harvests their gradients back into the store after backward().
class ParamBinder {
 public:
  ParamBinder(Tape& tape, const ParamStore& store)
      : tape_(&tape), store_(&store), leaves_(store.size(), -1) {}

  int operator()(int param_id) {
    int& leaf = leaves_[param_id];
    if (leaf < 0) leaf = tape_->leaf((*store_)[param_id].value);
    return leaf;
  }

  // Adds tape gradients into store gradients, in parameter order.
  void accumulate_grads(ParamStore& store) const;

  // Tape gradients by parameter id; parameters this pass never touched get an
  // empty matrix.
  std::vector<Matrix> collect_grads() const;

 private:
  Tape* tape_;
  const ParamStore* store_;
  std::vector<int> leaves_;
};

struct AttentionUnitParams {
  int wq, wk, wv, wo;                              // d x d; head blocks are column slices
  int ffn_w1, ffn_b1, ffn_w2, ffn_b2;              // d x d and 1 x d
  int ln1_gain, ln1_shift, ln2_gain, ln2_shift;    // 1 x d
};

struct EncoderLayerParams {
  int fuse_w, fuse_b;  // 2d x d, 1 x d
  AttentionUnitParams label_unit;     // label stream attends to token streams
  AttentionUnitParams entity_unit;    // entity stream attends to labels
  AttentionUnitParams relation_unit;  // relation stream attends to labels
};

struct EncoderParams {
  int proj_label_w, proj_label_b;  // d x d initial stream projections
  int proj_entity_w, proj_entity_b;
  int proj_relation_w, proj_relation_b;
  std::vector<EncoderLayerParams> layers;

  static EncoderParams create(ParamStore& store, const EncoderConfig& cfg, Rng& rng);
};

// Tape node ids of the three streams after some layer.
struct StreamNodes {
  int label;
  int entity;
  int relation;
};

// Diagnostic hooks: node ids of every attention softmax and every pre-affine
// normalized matrix, for invariant checks.
struct EncoderTrace {
  std::vector<int> softmax_nodes;
  std::vector<int> prenorm_nodes;
};

int multi_head_attention(Tape& t, int q, int k, int v, const AttentionUnitParams& p, ParamBinder& bind,
                         const EncoderConfig& cfg, EncoderTrace* trace = nullptr);
int position_wise_ffn(Tape& t, int x, const AttentionUnitParams& p, ParamBinder& bind);
int attention_unit(Tape& t, int q, int k, int v, const AttentionUnitParams& p, ParamBinder& bind,
                   const EncoderConfig& cfg, EncoderTrace* trace = nullptr);
int fuse_streams(Tape& t, int h_entity, int h_relation, const EncoderLayerParams& p, ParamBinder& bind);

StreamNodes encode_layer(Tape& t, const StreamNodes& in, const EncoderLayerParams& p, ParamBinder& bind,
                         const EncoderConfig& cfg, EncoderTrace* trace = nullptr);

// Projects the aligned token embeddings into the three initial streams, then
// applies the stacked layers.
StreamNodes encode_stack(Tape& t, const Matrix& embeddings, const EncoderParams& p, ParamBinder& bind,
                         const EncoderConfig& cfg, EncoderTrace* trace = nullptr);

}  // namespace tagspan
