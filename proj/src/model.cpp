#include "tagspan/model.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace tagspan {

Model::Model(ModelConfig cfg, TypeSchema schema, LabelVocabulary vocab)
    : cfg_(std::move(cfg)), schema_(std::move(schema)), vocab_(std::move(vocab)) {
  if (cfg_.max_span_width < 1) throw std::invalid_argument("model: span width threshold must be >= 1");
  if (cfg_.alpha <= 0.0 || cfg_.alpha >= 1.0)
    throw std::invalid_argument("model: relation threshold must lie in (0, 1)");
  Rng rng(cfg_.init_seed);
  const int d = cfg_.encoder.dim;
  if (cfg_.label_stream) {
    encoder_ = EncoderParams::create(store_, cfg_.encoder, rng);
  } else {
    if (d <= 0) throw std::invalid_argument("model: dim must be positive");
    encoder_.proj_entity_w = store_.add_weight("proj/entity/w", d, d, rng);
    encoder_.proj_entity_b = store_.add_bias("proj/entity/b", d);
    encoder_.proj_relation_w = store_.add_weight("proj/relation/w", d, d, rng);
    encoder_.proj_relation_b = store_.add_bias("proj/relation/b", d);
  }
  const int label_count = cfg_.label_stream ? vocab_.size() : 0;
  heads_ = HeadParams::create(store_, d, cfg_.width_dim, cfg_.max_span_width, label_count,
                              static_cast<int>(schema_.entity_types.size()),
                              static_cast<int>(schema_.relation_types.size()), rng);
}

StreamNodes Model::streams(Tape& t, ParamBinder& bind, const Matrix& embeddings,
                           EncoderTrace* trace) const {
  if (cfg_.label_stream) return encode_stack(t, embeddings, encoder_, bind, cfg_.encoder, trace);
  const int emb = t.leaf(embeddings);
  StreamNodes s;
  s.label = -1;
  s.entity = t.add_row(t.matmul(emb, bind(encoder_.proj_entity_w)), bind(encoder_.proj_entity_b));
  s.relation = t.add_row(t.matmul(emb, bind(encoder_.proj_relation_w)), bind(encoder_.proj_relation_b));
  return s;
}

Model::Prediction Model::predict(const Matrix& embeddings) const {
  Prediction pred;
  const int n = embeddings.rows();
  if (n == 0) return pred;

  Tape t;
  ParamBinder bind(t, store_);
  const StreamNodes s = streams(t, bind, embeddings);

  if (cfg_.label_stream) {
    const Matrix& probs = t.value(tag_probabilities(t, s.label, heads_, bind));
    for (int i = 0; i < n; ++i) {
      int best = 0;
      for (int c = 1; c < probs.cols(); ++c)
        if (probs(i, c) > probs(i, best)) best = c;
      pred.tags.push_back(TokenLabel::parse(vocab_.labels[best]));
    }
  }

  const auto spans = enumerate_spans(n, cfg_.max_span_width);
  const int reps = span_representations(t, s.entity, heads_, bind, spans);
  const Matrix& posteriors = t.value(span_posteriors(t, reps, heads_, bind));
  pred.entities = extract_entities(posteriors, spans);

  if (!schema_.relation_types.empty() && pred.entities.size() >= 2) {
    const auto candidates = build_relation_candidates(static_cast<int>(pred.entities.size()));
    std::vector<std::pair<SpanCandidate, SpanCandidate>> pairs;
    pairs.reserve(candidates.size());
    for (const auto& c : candidates)
      pairs.emplace_back(pred.entities[c.head].span, pred.entities[c.tail].span);
    const int rel_reps = relation_representations(t, s.relation, heads_, bind, pairs);
    const Matrix& scores = t.value(relation_scores(t, rel_reps, heads_, bind));
    pred.relations = extract_relations(scores, candidates, cfg_.alpha);
  }
  return pred;
}

Model::DocTargets Model::make_targets(const AnnotatedDocument& doc, Matrix embeddings, int span_quota,
                                      int pair_quota, uint64_t seed,
                                      std::vector<std::string>* warnings) const {
  DocTargets out;
  out.embeddings = std::move(embeddings);
  if (out.embeddings.rows() != doc.size())
    throw std::invalid_argument("make_targets: embedding rows do not match token count");

  if (cfg_.label_stream) {
    for (const auto& label : encode_labels(doc)) {
      const int id = vocab_.index(label.str());
      if (id < 0)
        throw std::invalid_argument("make_targets: label \"" + label.str() +
                                    "\" missing from the vocabulary");
      out.tag_gold.push_back(id);
    }
  }

  const int none_class = static_cast<int>(schema_.entity_types.size());
  std::vector<bool> kept(doc.entities.size(), false);
  for (size_t e = 0; e < doc.entities.size(); ++e) {
    const auto& m = doc.entities[e];
    if (m.width() > cfg_.max_span_width) {
      if (warnings)
        warnings->push_back("gold entity [" + std::to_string(m.start) + "," + std::to_string(m.end) +
                            ") wider than the span threshold; dropped from training targets");
      continue;
    }
    kept[e] = true;
    out.spans.push_back(SpanCandidate{m.start, m.width()});
    out.span_classes.push_back(schema_.entity_type_index(m.type));
  }

  const auto neg = sample_negatives(doc, cfg_.max_span_width, span_quota, pair_quota, seed);
  for (const auto& s : neg.spans) {
    out.spans.push_back(s);
    out.span_classes.push_back(none_class);
  }

  if (!schema_.relation_types.empty()) {
    std::map<std::pair<int, int>, std::vector<int>> gold_pairs;
    for (const auto& rel : doc.relations) {
      if (!kept[rel.head] || !kept[rel.tail]) {
        if (warnings)
          warnings->push_back("gold relation " + rel.type +
                              " references a dropped entity; dropped from training targets");
        continue;
      }
      gold_pairs[{rel.head, rel.tail}].push_back(schema_.relation_type_index(rel.type));
    }
    std::vector<Matrix> rows;
    auto add_pair = [&](int head, int tail, const std::vector<int>& types) {
      const auto& h = doc.entities[head];
      const auto& t = doc.entities[tail];
      out.pairs.emplace_back(SpanCandidate{h.start, h.width()}, SpanCandidate{t.start, t.width()});
      Matrix row(1, static_cast<int>(schema_.relation_types.size()));
      for (int ty : types) row(0, ty) = 1.0;
      rows.push_back(std::move(row));
    };
    for (const auto& [pair, types] : gold_pairs) add_pair(pair.first, pair.second, types);
    for (const auto& [head, tail] : neg.entity_pairs)
      if (kept[head] && kept[tail]) add_pair(head, tail, {});
    out.pair_labels.resize(static_cast<int>(rows.size()), static_cast<int>(schema_.relation_types.size()));
    for (size_t r = 0; r < rows.size(); ++r)
      for (int c = 0; c < out.pair_labels.cols(); ++c)
        out.pair_labels(static_cast<int>(r), c) = rows[r](0, c);
  }
  return out;
}

Model::LossNodes Model::training_loss(Tape& t, ParamBinder& bind, const DocTargets& doc,
                                      double inv_tags, double inv_spans, double inv_pairs,
                                      EncoderTrace* trace) const {
  LossNodes out;
  if (doc.embeddings.rows() == 0) return out;
  const StreamNodes s = streams(t, bind, doc.embeddings, trace);

  std::vector<int> parts;
  if (cfg_.label_stream && !doc.tag_gold.empty() && inv_tags > 0.0) {
    const int probs = tag_probabilities(t, s.label, heads_, bind);
    const int sum = t.cross_entropy_sum(probs, doc.tag_gold, cfg_.clamp_eps);
    out.tag_sum = t.value(sum)(0, 0);
    parts.push_back(t.scale(sum, inv_tags));
  }
  if (!doc.spans.empty() && inv_spans > 0.0) {
    const int reps = span_representations(t, s.entity, heads_, bind, doc.spans);
    const int posteriors = span_posteriors(t, reps, heads_, bind);
    const int sum = t.cross_entropy_sum(posteriors, doc.span_classes, cfg_.clamp_eps);
    out.span_sum = t.value(sum)(0, 0);
    parts.push_back(t.scale(sum, inv_spans));
  }
  if (!doc.pairs.empty() && !schema_.relation_types.empty() && inv_pairs > 0.0) {
    const int reps = relation_representations(t, s.relation, heads_, bind, doc.pairs);
    const int scores = relation_scores(t, reps, heads_, bind);
    const int sum = t.bce_sum(scores, doc.pair_labels, cfg_.clamp_eps);
    out.rel_sum = t.value(sum)(0, 0);
    parts.push_back(t.scale(sum, inv_pairs));
  }
  if (parts.empty()) return out;
  int total = parts[0];
  for (size_t i = 1; i < parts.size(); ++i) total = t.add(total, parts[i]);
  out.total = total;
  return out;
}

InteractionMode interaction_mode_from_string(const std::string& name) {
  if (name == "full") return InteractionMode::full;
  if (name == "no_re_to_ner") return InteractionMode::no_re_to_ner;
  if (name == "no_ner_to_re") return InteractionMode::no_ner_to_re;
  if (name == "none") return InteractionMode::none;
  throw std::invalid_argument("unknown interaction mode: " + name);
}

std::string to_string(InteractionMode mode) {
  switch (mode) {
    case InteractionMode::full: return "full";
    case InteractionMode::no_re_to_ner: return "no_re_to_ner";
    case InteractionMode::no_ner_to_re: return "no_ner_to_re";
    case InteractionMode::none: return "none";
  }
  return "full";
}

}  // namespace tagspan
