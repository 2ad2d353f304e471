#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "tagspan/autodiff.hpp"
#include "tagspan/data.hpp"
#include "tagspan/encoder.hpp"

namespace tagspan {

struct SpanCandidate {
  int start = 0;
  int width = 1;

  int end() const { return start + width; }
  friend bool operator==(const SpanCandidate& a, const SpanCandidate& b) {
    return a.start == b.start && a.width == b.width;
  }
  friend auto operator<=>(const SpanCandidate& a, const SpanCandidate& b) = default;
};

// All spans of width 1..min(max_width, n), in (start, width) order.
std::vector<SpanCandidate> enumerate_spans(int n, int max_width);

struct HeadParams {
  int width_table = -1;        // max_width x width_dim, row w-1 for width w
  int tag_w = -1, tag_b = -1;  // d x l (absent without a label stream)
  int span_w = -1, span_b = -1;
  int rel_w = -1, rel_b = -1;

  static HeadParams create(ParamStore& store, int d, int width_dim, int max_width, int label_count,
                           int entity_type_count, int relation_type_count, Rng& rng);
};

// Row-wise softmax over the label vocabulary: n x l, rows sum to 1.
int tag_probabilities(Tape& t, int h_label, const HeadParams& p, ParamBinder& bind);

// One row per span: [row(start); row(end-1); width embedding].
int span_representations(Tape& t, int h_stream, const HeadParams& p, ParamBinder& bind,
                         const std::vector<SpanCandidate>& spans);

// Posterior over entity types + the implicit none class (last column).
int span_posteriors(Tape& t, int reps, const HeadParams& p, ParamBinder& bind);

struct SpanPrediction {
  SpanCandidate span;
  int type = 0;  // index into schema entity types
  double score = 0.0;
};

// Spans whose argmax is a real type. Ties keep the earliest class index, so
// the trailing none class never wins a tie.
std::vector<SpanPrediction> extract_entities(const Matrix& posteriors,
                                             const std::vector<SpanCandidate>& spans);

struct RelationCandidate {
  int head = 0;  // indices into the predicted entity list
  int tail = 0;
};

// All ordered pairs of distinct predicted entities: k * (k - 1) candidates.
std::vector<RelationCandidate> build_relation_candidates(int entity_count);

// One row per (head, tail) span pair: [head rep; tail rep; max-pooled context
// strictly between the two spans] (zero context when none).
int relation_representations(Tape& t, int h_stream, const HeadParams& p, ParamBinder& bind,
                             const std::vector<std::pair<SpanCandidate, SpanCandidate>>& pairs);

// Independent per-type sigmoid scores.
int relation_scores(Tape& t, int reps, const HeadParams& p, ParamBinder& bind);

struct RelationPrediction {
  int head = 0;  // indices into the predicted entity list
  int tail = 0;
  int type = 0;  // index into schema relation types
  double score = 0.0;
};

// Every (pair, type) with score >= alpha; multi-label by construction.
std::vector<RelationPrediction> extract_relations(const Matrix& scores,
                                                  const std::vector<RelationCandidate>& candidates,
                                                  double alpha);

struct NegativeSamples {
  std::vector<SpanCandidate> spans;                // target: none class
  std::vector<std::pair<int, int>> entity_pairs;   // gold-entity indices, target: all zero
};

// Uniformly samples, without replacement, up to span_quota non-gold spans and
// up to pair_quota unrelated ordered gold-entity pairs. Deterministic in seed.
NegativeSamples sample_negatives(const AnnotatedDocument& doc, int max_width, int span_quota,
                                 int pair_quota, uint64_t seed);

}  // namespace tagspan
