#include "tagspan/runner.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "tagspan/checkpoint.hpp"
#include "tagspan/embedding.hpp"
#include "tagspan/eval.hpp"
#include "tagspan/gradcheck.hpp"
#include "tagspan/predictions.hpp"

namespace tagspan {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<TrainExample> build_examples(const Dataset& ds, const std::string& embeddings_path, int dim,
                                         uint64_t seed) {
  std::vector<TrainExample> examples;
  examples.reserve(ds.documents.size());
  if (embeddings_path.empty()) {
    EmbedderConfig ec;
    ec.dim = dim;
    ec.seed = hash_string("embedder", seed);
    for (const auto& doc : ds.documents)
      examples.push_back(TrainExample{doc, toy_embed(doc.tokens, ec)});
  } else {
    const auto subs = load_precomputed(embeddings_path, dim);
    if (subs.size() != ds.documents.size())
      throw ParseError("embeddings file has " + std::to_string(subs.size()) + " records for " +
                       std::to_string(ds.documents.size()) + " documents");
    for (size_t i = 0; i < subs.size(); ++i) {
      check_alignment(subs[i], ds.documents[i].size(), static_cast<int>(i));
      examples.push_back(TrainExample{ds.documents[i], align_subtokens(subs[i])});
    }
  }
  return examples;
}

Model build_model(const TrainConfig& t, const std::string& mode, const TypeSchema& schema,
                  const LabelVocabulary& vocab) {
  ModelConfig mc;
  mc.encoder.layers = t.layers;
  mc.encoder.heads = t.heads;
  mc.encoder.dim = t.dim;
  mc.encoder.mode = mode == "no_label" ? InteractionMode::full : interaction_mode_from_string(mode);
  mc.width_dim = t.width_dim;
  mc.max_span_width = t.max_span_width;
  mc.alpha = t.alpha;
  mc.label_stream = mode != "no_label";
  mc.init_seed = hash_string("init", t.seed);
  return Model(mc, schema, vocab);
}

json epoch_to_json(const EpochLog& log) {
  return json{{"epoch", log.epoch},
              {"tag_loss", log.loss.tag},
              {"span_loss", log.loss.span},
              {"relation_loss", log.loss.relation},
              {"joint_loss", log.loss.joint},
              {"lr", log.lr},
              {"wall_time_s", log.wall_time_s}};
}

std::vector<DocPrediction> predict_corpus(const Model& model, const std::vector<TrainExample>& examples) {
  std::vector<DocPrediction> out(examples.size());
  const int count = static_cast<int>(examples.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
  for (int i = 0; i < count; ++i)
    out[i] = to_doc_prediction(model.predict(examples[i].embeddings), model.schema());
  return out;
}

std::vector<DocRecords> gold_records(const Dataset& ds) {
  std::vector<DocRecords> out;
  out.reserve(ds.documents.size());
  for (const auto& doc : ds.documents) out.push_back(records_from_document(doc));
  return out;
}

std::vector<DocRecords> prediction_records(const std::vector<DocPrediction>& preds, const Dataset& ds) {
  std::vector<DocRecords> out;
  out.reserve(preds.size());
  for (size_t i = 0; i < preds.size(); ++i)
    out.push_back(records_from_prediction(preds[i], ds.documents[i].size()));
  return out;
}

// Predictions either come from a file or from running the checkpointed model.
std::vector<DocPrediction> acquire_predictions(const RunConfig& cfg, const Dataset& ds) {
  if (!cfg.predictions.empty()) {
    auto preds = load_predictions(cfg.predictions);
    if (preds.empty()) preds.resize(ds.documents.size());  // an empty file predicts nothing
    if (preds.size() != ds.documents.size())
      throw ParseError("predictions file has " + std::to_string(preds.size()) + " records for " +
                       std::to_string(ds.documents.size()) + " documents");
    return preds;
  }
  TrainConfig tc;
  Model model = load_checkpoint(cfg.checkpoint, &tc);
  const auto examples = build_examples(ds, cfg.embeddings, tc.dim, tc.seed);
  return predict_corpus(model, examples);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

int cmd_train(const RunConfig& cfg, std::ostream& out);
int cmd_cross_validate(const RunConfig& cfg, std::ostream& out);

int cmd_train(const RunConfig& cfg, std::ostream& out) {
  if (cfg.folds >= 2) return cmd_cross_validate(cfg, out);
  const TypeSchema schema = load_schema(cfg.schema_path);
  const Dataset ds = parse_dataset(cfg.dataset, schema, cfg.max_tokens);
  const LabelVocabulary vocab = LabelVocabulary::build(ds);
  Model model = build_model(cfg.train, cfg.mode, schema, vocab);
  const auto examples = build_examples(ds, cfg.embeddings, cfg.train.dim, cfg.train.seed);

  fs::create_directories(cfg.out_dir);
  const fs::path log_path = fs::path(cfg.out_dir) / "train_log.jsonl";
  std::ofstream log(log_path, std::ios::binary);
  if (!log) throw std::runtime_error("cannot write " + log_path.string());
  train(model, examples, cfg.train, [&](const EpochLog& e) { log << epoch_to_json(e).dump() << "\n"; });
  log.close();

  const std::string ckpt =
      cfg.checkpoint.empty() ? (fs::path(cfg.out_dir) / "checkpoint.json").string() : cfg.checkpoint;
  save_checkpoint(ckpt, model, cfg.train);
  out << "wrote " << ckpt << "\n";
  out << "wrote " << log_path.string() << "\n";
  return 0;
}

int cmd_cross_validate(const RunConfig& cfg, std::ostream& out) {
  const TypeSchema schema = load_schema(cfg.schema_path);
  const Dataset ds = parse_dataset(cfg.dataset, schema, cfg.max_tokens);
  if (static_cast<int>(ds.documents.size()) < cfg.folds)
    throw std::runtime_error("fewer documents than folds");
  const auto fold_of = kfold_assignment(ds.documents.size(), cfg.folds, cfg.train.seed);
  fs::create_directories(cfg.out_dir);

  json summary = json::object();
  std::map<std::string, double> f1_sums;
  for (int fold = 0; fold < cfg.folds; ++fold) {
    Dataset train_ds, test_ds;
    train_ds.schema = test_ds.schema = schema;
    for (size_t i = 0; i < ds.documents.size(); ++i)
      (fold_of[i] == fold ? test_ds : train_ds).documents.push_back(ds.documents[i]);

    const LabelVocabulary vocab = LabelVocabulary::build(train_ds);
    Model model = build_model(cfg.train, cfg.mode, schema, vocab);
    // precomputed embeddings are per-document; slice them the same way
    std::vector<TrainExample> train_ex, test_ex;
    {
      const auto all = build_examples(ds, cfg.embeddings, cfg.train.dim, cfg.train.seed);
      for (size_t i = 0; i < all.size(); ++i)
        (fold_of[i] == fold ? test_ex : train_ex).push_back(all[i]);
    }
    train(model, train_ex, cfg.train);

    const auto preds = predict_corpus(model, test_ex);
    std::vector<DocRecords> gold, predicted;
    for (size_t i = 0; i < test_ex.size(); ++i) {
      gold.push_back(records_from_document(test_ex[i].doc));
      predicted.push_back(records_from_prediction(preds[i], test_ex[i].doc.size()));
    }
    json fold_report = json::object();
    for (const auto& name : cfg.criteria) {
      const auto report = score_corpus(gold, predicted, criterion_from_string(name), Aggregation::micro);
      fold_report[name] = json::parse(report_to_json_text(report));
      f1_sums[name] += report.overall.f1;
    }
    const fs::path path = fs::path(cfg.out_dir) / ("fold" + std::to_string(fold) + "_metrics.json");
    write_text(path, fold_report.dump(2) + "\n");
    out << "fold " << fold << ": " << path.string() << "\n";
    summary["folds"].push_back(fold_report);
  }
  for (const auto& name : cfg.criteria)
    summary["mean_micro_f1"][name] = f1_sums[name] / static_cast<double>(cfg.folds);
  const fs::path path = fs::path(cfg.out_dir) / "cv_summary.json";
  write_text(path, summary.dump(2) + "\n");
  out << "wrote " << path.string() << "\n";
  return 0;
}

int cmd_predict(const RunConfig& cfg, std::ostream& out) {
  const TypeSchema schema = load_schema(cfg.schema_path);
  const Dataset ds = parse_dataset(cfg.dataset, schema, cfg.max_tokens);
  TrainConfig tc;
  Model model = load_checkpoint(cfg.checkpoint, &tc);
  const auto examples = build_examples(ds, cfg.embeddings, tc.dim, tc.seed);
  const auto preds = predict_corpus(model, examples);
  fs::create_directories(cfg.out_dir);
  const fs::path path = fs::path(cfg.out_dir) / "predictions.json";
  save_predictions(path.string(), preds);
  out << "wrote " << path.string() << "\n";
  return 0;
}

int cmd_evaluate(const RunConfig& cfg, std::ostream& out) {
  const TypeSchema schema = load_schema(cfg.schema_path);
  const Dataset ds = parse_dataset(cfg.dataset, schema, cfg.max_tokens);
  const auto preds = acquire_predictions(cfg, ds);
  const auto gold = gold_records(ds);
  const auto predicted = prediction_records(preds, ds);

  fs::create_directories(cfg.out_dir);
  for (const auto& name : cfg.criteria) {
    const MatchCriterion criterion = criterion_from_string(name);
    for (const Aggregation agg : {Aggregation::micro, Aggregation::macro}) {
      const auto report = score_corpus(gold, predicted, criterion, agg);
      const fs::path path =
          fs::path(cfg.out_dir) / ("metrics_" + name + "_" + to_string(agg) + ".json");
      write_text(path, report_to_json_text(report));
      out << report_to_table(report) << "\n";
    }
  }
  return 0;
}

int cmd_analyze(const RunConfig& cfg, std::ostream& out) {
  const TypeSchema schema = load_schema(cfg.schema_path);
  const Dataset ds = parse_dataset(cfg.dataset, schema, cfg.max_tokens);
  const auto preds = acquire_predictions(cfg, ds);
  const auto gold = gold_records(ds);
  const auto predicted = prediction_records(preds, ds);
  fs::create_directories(cfg.out_dir);

  auto dump_buckets = [&](const std::map<std::string, MetricsReport>& buckets, const fs::path& path,
                          const std::string& title) {
    json j = json::object();
    if (!buckets.empty()) {
      j["criterion"] = buckets.begin()->second.criterion;
      j["aggregation"] = buckets.begin()->second.aggregation;
    }
    j["buckets"] = json::object();
    for (const auto& [bucket, report] : buckets)
      j["buckets"][bucket] = json::parse(report_to_json_text(report));
    write_text(path, j.dump(2) + "\n");
    out << title << "\n";
    for (const auto& [bucket, report] : buckets)
      out << "  " << std::left << std::setw(8) << bucket << " F1 " << std::fixed
          << std::setprecision(4) << report.overall.f1 << "\n";
    out << "wrote " << path.string() << "\n";
  };

  dump_buckets(bucketed_report(gold, predicted, BucketKind::entity_length,
                               MatchCriterion::ner_boundary_type, Aggregation::micro),
               fs::path(cfg.out_dir) / "analysis_entity_length.json", "NER by entity length");
  for (const auto& name : cfg.criteria) {
    const MatchCriterion criterion = criterion_from_string(name);
    dump_buckets(bucketed_report(gold, predicted, BucketKind::text_length, criterion, Aggregation::micro),
                 fs::path(cfg.out_dir) / ("analysis_text_length_" + name + ".json"),
                 name + " by text length");
  }
  return 0;
}

int cmd_ablate(const RunConfig& cfg, std::ostream& out) {
  const TypeSchema schema = load_schema(cfg.schema_path);
  const Dataset ds = parse_dataset(cfg.dataset, schema, cfg.max_tokens);
  const LabelVocabulary vocab = LabelVocabulary::build(ds);
  const auto examples = build_examples(ds, cfg.embeddings, cfg.train.dim, cfg.train.seed);
  const auto gold = gold_records(ds);
  fs::create_directories(cfg.out_dir);

  const std::vector<std::string> variants = {"full", "no_label", "no_re_to_ner", "no_ner_to_re", "none"};
  json table = json::array();
  out << std::left << std::setw(16) << "variant" << std::right << std::setw(10) << "NER-F1"
      << std::setw(10) << "RE+-F1" << "\n";
  for (const auto& variant : variants) {
    Model model = build_model(cfg.train, variant, schema, vocab);
    train(model, examples, cfg.train);
    const auto predicted = prediction_records(predict_corpus(model, examples), ds);
    const auto ner =
        score_corpus(gold, predicted, MatchCriterion::ner_boundary_type, Aggregation::micro);
    const auto rep = score_corpus(gold, predicted, MatchCriterion::re_plus, Aggregation::micro);
    table.push_back(json{{"variant", variant}, {"ner_f1", ner.overall.f1}, {"re_plus_f1", rep.overall.f1}});
    out << std::left << std::setw(16) << variant << std::right << std::setw(10) << std::fixed
        << std::setprecision(4) << ner.overall.f1 << std::setw(10) << rep.overall.f1 << "\n";
  }
  const fs::path path = fs::path(cfg.out_dir) / "ablation.json";
  write_text(path, table.dump(2) + "\n");
  out << "wrote " << path.string() << "\n";
  return 0;
}

int cmd_gradcheck(const RunConfig& cfg, std::ostream& out) {
  bool all_pass = true;
  for (const InteractionMode mode : {InteractionMode::full, InteractionMode::no_re_to_ner,
                                     InteractionMode::no_ner_to_re, InteractionMode::none}) {
    GradCheckConfig gc;
    gc.mode = mode;
    gc.seed = cfg.train.seed;
    const auto report = check_gradients(gc);
    out << "mode " << to_string(mode) << ": max relative error " << std::scientific
        << std::setprecision(3) << report.max_rel_error << (report.pass ? " PASS" : " FAIL") << "\n";
    if (!report.pass) {
      for (const auto& row : report.rows)
        if (!row.pass)
          out << "  group " << row.group << " max relative error " << row.max_rel_error << "\n";
      all_pass = false;
    }
  }
  return all_pass ? 0 : 1;
}

int cmd_tags(const RunConfig& cfg, std::ostream& out) {
  if (!cfg.conll.empty()) {
    std::ifstream in(cfg.conll, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + cfg.conll);
    std::ostringstream ss;
    ss << in.rdbuf();
    json decoded = json::array();
    for (const auto& [tokens, labels] : parse_conll(ss.str())) {
      json rec;
      rec["tokens"] = tokens;
      rec["entities"] = json::array();
      for (const auto& m : decode_labels(labels))
        rec["entities"].push_back(json{{"type", m.type}, {"start", m.start}, {"end", m.end}});
      decoded.push_back(std::move(rec));
    }
    out << decoded.dump(2) << "\n";
    return 0;
  }
  const TypeSchema schema = load_schema(cfg.schema_path);
  const Dataset ds = parse_dataset(cfg.dataset, schema, cfg.max_tokens);
  std::ostringstream text;
  for (const auto& doc : ds.documents) text << to_conll(doc.tokens, encode_labels(doc));
  fs::create_directories(cfg.out_dir);
  const fs::path path = fs::path(cfg.out_dir) / "labels.conll";
  write_text(path, text.str());
  out << text.str();
  out << "wrote " << path.string() << "\n";
  return 0;
}

}  // namespace

std::vector<int> kfold_assignment(size_t count, int folds, uint64_t seed) {
  std::vector<size_t> order(count);
  for (size_t i = 0; i < count; ++i) order[i] = i;
  Rng rng(hash_string("folds", seed));
  for (size_t i = count; i > 1; --i) std::swap(order[i - 1], order[rng.next_below(i)]);
  std::vector<int> fold(count);
  for (size_t pos = 0; pos < count; ++pos) fold[order[pos]] = static_cast<int>(pos % folds);
  return fold;
}

int run_command(const std::string& command, const RunConfig& config, std::ostream& out,
                std::ostream& err) {
  RunConfig cfg = config;
  // evaluate/predict/analyze fall back to the checkpoint train writes
  if (cfg.checkpoint.empty() && cfg.predictions.empty() &&
      fs::exists(fs::path(cfg.out_dir) / "checkpoint.json"))
    cfg.checkpoint = (fs::path(cfg.out_dir) / "checkpoint.json").string();
  try {
    validate_config(cfg, command);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  }
  try {
    if (command == "train") return cmd_train(cfg, out);
    if (command == "evaluate") return cmd_evaluate(cfg, out);
    if (command == "predict") return cmd_predict(cfg, out);
    if (command == "ablate") return cmd_ablate(cfg, out);
    if (command == "analyze") return cmd_analyze(cfg, out);
    if (command == "gradcheck") return cmd_gradcheck(cfg, out);
    if (command == "tags") return cmd_tags(cfg, out);
    err << "unknown command: " << command << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace tagspan
