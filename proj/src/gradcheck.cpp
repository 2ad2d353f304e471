#include "tagspan/gradcheck.hpp"

#include <cmath>

#include "tagspan/embedding.hpp"

namespace tagspan {

double batch_loss_value(const Model& model, const std::vector<Model::DocTargets>& batch) {
  long tags = 0, spans = 0, pairs = 0;
  for (const auto& doc : batch) {
    tags += doc.tag_instances();
    spans += doc.span_instances();
    pairs += doc.pair_instances();
  }
  const double inv_tags = tags > 0 ? 1.0 / static_cast<double>(tags) : 0.0;
  const double inv_spans = spans > 0 ? 1.0 / static_cast<double>(spans) : 0.0;
  const double inv_pairs = pairs > 0 ? 1.0 / static_cast<double>(pairs) : 0.0;
  double total = 0.0;
  for (const auto& doc : batch) {
    Tape tape;
    ParamBinder bind(tape, model.params());
    const auto nodes = model.training_loss(tape, bind, doc, inv_tags, inv_spans, inv_pairs);
    if (nodes.total >= 0) total += tape.value(nodes.total)(0, 0);
  }
  return total;
}

GradCheckReport compare_gradients(Model& model, const std::vector<Model::DocTargets>& batch,
                                  double fd_step, double tolerance,
                                  const std::function<void(ParamStore&)>& mutate) {
  long tags = 0, spans = 0, pairs = 0;
  for (const auto& doc : batch) {
    tags += doc.tag_instances();
    spans += doc.span_instances();
    pairs += doc.pair_instances();
  }
  const double inv_tags = tags > 0 ? 1.0 / static_cast<double>(tags) : 0.0;
  const double inv_spans = spans > 0 ? 1.0 / static_cast<double>(spans) : 0.0;
  const double inv_pairs = pairs > 0 ? 1.0 / static_cast<double>(pairs) : 0.0;

  ParamStore& params = model.params();
  params.zero_grad();
  for (const auto& doc : batch) {
    Tape tape;
    ParamBinder bind(tape, params);
    const auto nodes = model.training_loss(tape, bind, doc, inv_tags, inv_spans, inv_pairs);
    if (nodes.total >= 0) {
      tape.backward(nodes.total);
      bind.accumulate_grads(params);
    }
  }
  if (mutate) mutate(params);

  GradCheckReport report;
  for (int p = 0; p < params.size(); ++p) {
    GradCheckRow row;
    row.group = params[p].name;
    Matrix& value = params[p].value;
    for (size_t k = 0; k < value.size(); ++k) {
      const double saved = value.data()[k];
      value.data()[k] = saved + fd_step;
      const double up = batch_loss_value(model, batch);
      value.data()[k] = saved - fd_step;
      const double down = batch_loss_value(model, batch);
      value.data()[k] = saved;
      const double numeric = (up - down) / (2.0 * fd_step);
      const double analytic = params[p].grad.data()[k];
      const double denom = std::max(std::abs(numeric), std::abs(analytic));
      if (denom < 1e-7) continue;  // both effectively zero
      row.max_rel_error = std::max(row.max_rel_error, std::abs(numeric - analytic) / denom);
    }
    row.pass = row.max_rel_error <= tolerance;
    report.max_rel_error = std::max(report.max_rel_error, row.max_rel_error);
    report.pass = report.pass && row.pass;
    report.rows.push_back(std::move(row));
  }
  return report;
}

GradCheckReport check_gradients(const GradCheckConfig& cfg) {
  TypeSchema schema;
  for (int i = 0; i < cfg.entity_types; ++i) schema.entity_types.push_back("E" + std::to_string(i));
  for (int i = 0; i < cfg.relation_types; ++i) schema.relation_types.push_back("R" + std::to_string(i));

  AnnotatedDocument doc;
  for (int i = 0; i < cfg.tokens; ++i) doc.tokens.push_back("tok" + std::to_string(i));
  if (cfg.entity_types > 0 && cfg.tokens >= 4) {
    doc.entities.push_back(EntityMention{0, std::min(2, cfg.max_span_width), schema.entity_types[0]});
    doc.entities.push_back(
        EntityMention{cfg.tokens - 2, cfg.tokens - 1, schema.entity_types[cfg.entity_types - 1]});
    if (cfg.relation_types > 0) doc.relations.push_back(RelationMention{0, 1, schema.relation_types[0]});
  }

  Dataset ds;
  ds.schema = schema;
  ds.documents.push_back(doc);
  LabelVocabulary vocab = LabelVocabulary::build(ds);

  ModelConfig mc;
  mc.encoder.dim = cfg.dim;
  mc.encoder.heads = cfg.heads;
  mc.encoder.layers = cfg.layers;
  mc.encoder.mode = cfg.mode;
  mc.width_dim = cfg.width_dim;
  mc.max_span_width = cfg.max_span_width;
  mc.label_stream = cfg.label_stream;
  mc.init_seed = cfg.seed;
  Model model(mc, schema, vocab);

  EmbedderConfig ec;
  ec.dim = cfg.dim;
  ec.seed = cfg.seed ^ 0xabcdef;
  const Matrix embeddings = toy_embed(doc.tokens, ec);

  std::vector<Model::DocTargets> batch;
  batch.push_back(model.make_targets(doc, embeddings, cfg.neg_spans, cfg.neg_relations, cfg.seed));
  return compare_gradients(model, batch, cfg.fd_step, cfg.tolerance);
}

}  // namespace tagspan
