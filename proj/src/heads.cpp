#include "tagspan/heads.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "tagspan/rng.hpp"

namespace tagspan {

std::vector<SpanCandidate> enumerate_spans(int n, int max_width) {
  std::vector<SpanCandidate> spans;
  if (n <= 0 || max_width <= 0) return spans;
  for (int start = 0; start < n; ++start)
    for (int width = 1; width <= std::min(max_width, n - start); ++width)
      spans.push_back(SpanCandidate{start, width});
  return spans;
}

HeadParams HeadParams::create(ParamStore& store, int d, int width_dim, int max_width, int label_count,
                              int entity_type_count, int relation_type_count, Rng& rng) {
  HeadParams p;
  p.width_table = store.add_weight("heads/width_table", max_width, width_dim, rng);
  if (label_count > 0) {
    p.tag_w = store.add_weight("heads/tag/w", d, label_count, rng);
    p.tag_b = store.add_bias("heads/tag/b", label_count);
  }
  const int span_in = 2 * d + width_dim;
  p.span_w = store.add_weight("heads/span/w", span_in, entity_type_count + 1, rng);
  p.span_b = store.add_bias("heads/span/b", entity_type_count + 1);
  if (relation_type_count > 0) {
    p.rel_w = store.add_weight("heads/rel/w", 2 * span_in + d, relation_type_count, rng);
    p.rel_b = store.add_bias("heads/rel/b", relation_type_count);
  }
  return p;
}

int tag_probabilities(Tape& t, int h_label, const HeadParams& p, ParamBinder& bind) {
  return t.softmax_rows(t.add_row(t.matmul(h_label, bind(p.tag_w)), bind(p.tag_b)));
}

int span_representations(Tape& t, int h_stream, const HeadParams& p, ParamBinder& bind,
                         const std::vector<SpanCandidate>& spans) {
  const int n = t.value(h_stream).rows();
  const int max_width = t.value(bind(p.width_table)).rows();
  std::vector<int> heads, tails, widths;
  heads.reserve(spans.size());
  for (const auto& s : spans) {
    if (s.start < 0 || s.end() > n) throw std::invalid_argument("span outside sentence");
    if (s.width < 1 || s.width > max_width)
      throw std::invalid_argument("span width " + std::to_string(s.width) +
                                  " outside the width table range");
    heads.push_back(s.start);
    tails.push_back(s.end() - 1);
    widths.push_back(s.width - 1);
  }
  const int head_rows = t.gather_rows(h_stream, std::move(heads));
  const int tail_rows = t.gather_rows(h_stream, std::move(tails));
  const int width_rows = t.gather_rows(bind(p.width_table), std::move(widths));
  return t.concat_cols({head_rows, tail_rows, width_rows});
}

int span_posteriors(Tape& t, int reps, const HeadParams& p, ParamBinder& bind) {
  return t.softmax_rows(t.add_row(t.matmul(reps, bind(p.span_w)), bind(p.span_b)));
}

std::vector<SpanPrediction> extract_entities(const Matrix& posteriors,
                                             const std::vector<SpanCandidate>& spans) {
  const int none_class = posteriors.cols() - 1;
  std::vector<SpanPrediction> out;
  for (int i = 0; i < posteriors.rows(); ++i) {
    int best = 0;
    for (int c = 1; c < posteriors.cols(); ++c)
      if (posteriors(i, c) > posteriors(i, best)) best = c;
    if (best != none_class)
      out.push_back(SpanPrediction{spans[i], best, posteriors(i, best)});
  }
  return out;
}

std::vector<RelationCandidate> build_relation_candidates(int entity_count) {
  std::vector<RelationCandidate> pairs;
  pairs.reserve(static_cast<size_t>(entity_count) * std::max(0, entity_count - 1));
  for (int a = 0; a < entity_count; ++a)
    for (int b = 0; b < entity_count; ++b)
      if (a != b) pairs.push_back(RelationCandidate{a, b});
  return pairs;
}

namespace {

std::pair<int, int> context_range(const SpanCandidate& a, const SpanCandidate& b) {
  const SpanCandidate& earlier = (a.start <= b.start) ? a : b;
  const SpanCandidate& later = (a.start <= b.start) ? b : a;
  const int first = earlier.end();
  const int last = later.start;
  return first < last ? std::make_pair(first, last) : std::make_pair(0, 0);
}

}  // namespace

int relation_representations(Tape& t, int h_stream, const HeadParams& p, ParamBinder& bind,
                             const std::vector<std::pair<SpanCandidate, SpanCandidate>>& pairs) {
  std::vector<SpanCandidate> heads, tails;
  std::vector<std::pair<int, int>> contexts;
  heads.reserve(pairs.size());
  for (const auto& [head, tail] : pairs) {
    heads.push_back(head);
    tails.push_back(tail);
    contexts.push_back(context_range(head, tail));
  }
  const int head_reps = span_representations(t, h_stream, p, bind, heads);
  const int tail_reps = span_representations(t, h_stream, p, bind, tails);
  const int ctx = t.max_pool_ranges(h_stream, std::move(contexts));
  return t.concat_cols({head_reps, tail_reps, ctx});
}

int relation_scores(Tape& t, int reps, const HeadParams& p, ParamBinder& bind) {
  return t.sigmoid(t.add_row(t.matmul(reps, bind(p.rel_w)), bind(p.rel_b)));
}

std::vector<RelationPrediction> extract_relations(const Matrix& scores,
                                                  const std::vector<RelationCandidate>& candidates,
                                                  double alpha) {
  std::vector<RelationPrediction> out;
  for (int i = 0; i < scores.rows(); ++i)
    for (int type = 0; type < scores.cols(); ++type)
      if (scores(i, type) >= alpha)
        out.push_back(RelationPrediction{candidates[i].head, candidates[i].tail, type, scores(i, type)});
  return out;
}

NegativeSamples sample_negatives(const AnnotatedDocument& doc, int max_width, int span_quota,
                                 int pair_quota, uint64_t seed) {
  NegativeSamples neg;
  Rng rng(seed);

  std::set<std::pair<int, int>> gold_spans;
  for (const auto& m : doc.entities) gold_spans.insert({m.start, m.end});
  std::vector<SpanCandidate> pool;
  for (const auto& s : enumerate_spans(doc.size(), max_width))
    if (!gold_spans.count({s.start, s.end()})) pool.push_back(s);
  for (size_t i : rng.sample_without_replacement(pool.size(), static_cast<size_t>(std::max(0, span_quota))))
    neg.spans.push_back(pool[i]);

  std::set<std::pair<int, int>> related;
  for (const auto& r : doc.relations) related.insert({r.head, r.tail});
  std::vector<std::pair<int, int>> pair_pool;
  const int k = static_cast<int>(doc.entities.size());
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b)
      if (a != b && !related.count({a, b})) pair_pool.push_back({a, b});
  for (size_t i :
       rng.sample_without_replacement(pair_pool.size(), static_cast<size_t>(std::max(0, pair_quota))))
    neg.entity_pairs.push_back(pair_pool[i]);

  return neg;
}

}  // namespace tagspan
