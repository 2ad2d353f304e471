#include "tagspan/checkpoint.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace tagspan {

using nlohmann::json;

namespace {

json train_config_to_json(const TrainConfig& cfg) {
  return json{{"lr", cfg.lr},
              {"warmup_ratio", cfg.warmup_ratio},
              {"weight_decay", cfg.weight_decay},
              {"batch_size", cfg.batch_size},
              {"epochs", cfg.epochs},
              {"layers", cfg.layers},
              {"heads", cfg.heads},
              {"max_span_width", cfg.max_span_width},
              {"alpha", cfg.alpha},
              {"width_dim", cfg.width_dim},
              {"neg_spans", cfg.neg_spans},
              {"neg_relations", cfg.neg_relations},
              {"dim", cfg.dim},
              {"seed", cfg.seed}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig cfg;
  cfg.lr = j.at("lr").get<double>();
  cfg.warmup_ratio = j.at("warmup_ratio").get<double>();
  cfg.weight_decay = j.at("weight_decay").get<double>();
  cfg.batch_size = j.at("batch_size").get<int>();
  cfg.epochs = j.at("epochs").get<int>();
  cfg.layers = j.at("layers").get<int>();
  cfg.heads = j.at("heads").get<int>();
  cfg.max_span_width = j.at("max_span_width").get<int>();
  cfg.alpha = j.at("alpha").get<double>();
  cfg.width_dim = j.at("width_dim").get<int>();
  cfg.neg_spans = j.at("neg_spans").get<int>();
  cfg.neg_relations = j.at("neg_relations").get<int>();
  cfg.dim = j.at("dim").get<int>();
  cfg.seed = j.at("seed").get<uint64_t>();
  return cfg;
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& model, const TrainConfig& cfg) {
  json j;
  j["format"] = "tagspan.checkpoint.v1";
  j["train_config"] = train_config_to_json(cfg);
  const ModelConfig& mc = model.config();
  j["model"] = json{{"mode", to_string(mc.encoder.mode)},
                    {"label_stream", mc.label_stream},
                    {"layers", mc.encoder.layers},
                    {"heads", mc.encoder.heads},
                    {"dim", mc.encoder.dim},
                    {"width_dim", mc.width_dim},
                    {"max_span_width", mc.max_span_width},
                    {"alpha", mc.alpha},
                    {"layer_norm_eps", mc.encoder.layer_norm_eps},
                    {"clamp_eps", mc.clamp_eps},
                    {"init_seed", mc.init_seed}};
  j["schema"] = json{{"entities", model.schema().entity_types}, {"relations", model.schema().relation_types}};
  j["vocab"] = model.vocab().labels;
  json params = json::object();
  const ParamStore& store = model.params();
  for (int i = 0; i < store.size(); ++i) {
    const Parameter& p = store[i];
    std::vector<double> data(p.value.data(), p.value.data() + p.value.size());
    params[p.name] = json{{"shape", {p.value.rows(), p.value.cols()}}, {"data", std::move(data)}};
  }
  j["params"] = std::move(params);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << j.dump() << '\n';
}

Model load_checkpoint(const std::string& path, TrainConfig* train_cfg) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("checkpoint is not valid JSON: " + std::string(e.what()));
  }
  if (j.value("format", "") != "tagspan.checkpoint.v1")
    throw std::runtime_error("unrecognized checkpoint format");

  const TrainConfig cfg = train_config_from_json(j.at("train_config"));
  if (train_cfg) *train_cfg = cfg;

  TypeSchema schema;
  schema.entity_types = j.at("schema").at("entities").get<std::vector<std::string>>();
  schema.relation_types = j.at("schema").at("relations").get<std::vector<std::string>>();
  LabelVocabulary vocab;
  vocab.labels = j.at("vocab").get<std::vector<std::string>>();
  for (size_t i = 0; i < vocab.labels.size(); ++i) vocab.ids[vocab.labels[i]] = static_cast<int>(i);

  ModelConfig mc;
  const json& jm = j.at("model");
  mc.encoder.layers = jm.at("layers").get<int>();
  mc.encoder.heads = jm.at("heads").get<int>();
  mc.encoder.dim = jm.at("dim").get<int>();
  mc.encoder.mode = interaction_mode_from_string(jm.at("mode").get<std::string>());
  mc.encoder.layer_norm_eps = jm.at("layer_norm_eps").get<double>();
  mc.width_dim = jm.at("width_dim").get<int>();
  mc.max_span_width = jm.at("max_span_width").get<int>();
  mc.alpha = jm.at("alpha").get<double>();
  mc.label_stream = jm.at("label_stream").get<bool>();
  mc.clamp_eps = jm.at("clamp_eps").get<double>();
  mc.init_seed = jm.at("init_seed").get<uint64_t>();

  Model model(mc, schema, vocab);
  ParamStore& store = model.params();
  const json& params = j.at("params");
  int assigned = 0;
  for (auto it = params.begin(); it != params.end(); ++it) {
    const int id = store.find(it.key());
    if (id < 0) throw std::runtime_error("checkpoint parameter not in model: " + it.key());
    Matrix& value = store[id].value;
    const auto shape = it.value().at("shape").get<std::vector<int>>();
    if (shape.size() != 2 || shape[0] != value.rows() || shape[1] != value.cols())
      throw std::runtime_error("checkpoint parameter shape mismatch: " + it.key());
    const auto data = it.value().at("data").get<std::vector<double>>();
    if (data.size() != value.size())
      throw std::runtime_error("checkpoint parameter size mismatch: " + it.key());
    for (size_t k = 0; k < data.size(); ++k) value.data()[k] = data[k];
    ++assigned;
  }
  if (assigned != store.size())
    throw std::runtime_error("checkpoint is missing " + std::to_string(store.size() - assigned) +
                             " parameter group(s)");
  return model;
}

}  // namespace tagspan
