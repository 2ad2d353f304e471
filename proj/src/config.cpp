#include "tagspan/config.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "tagspan/eval.hpp"

namespace tagspan {

bool operator==(const RunConfig& a, const RunConfig& b) {
  auto key = [](const RunConfig& c) {
    return std::tie(c.dataset, c.schema_path, c.embeddings, c.checkpoint, c.predictions, c.conll,
                    c.out_dir, c.mode, c.criteria, c.folds, c.max_tokens);
  };
  const auto& ta = a.train;
  const auto& tb = b.train;
  return key(a) == key(b) && ta.lr == tb.lr && ta.warmup_ratio == tb.warmup_ratio &&
         ta.weight_decay == tb.weight_decay && ta.batch_size == tb.batch_size &&
         ta.epochs == tb.epochs && ta.layers == tb.layers && ta.heads == tb.heads &&
         ta.max_span_width == tb.max_span_width && ta.alpha == tb.alpha &&
         ta.width_dim == tb.width_dim && ta.neg_spans == tb.neg_spans &&
         ta.neg_relations == tb.neg_relations && ta.dim == tb.dim && ta.seed == tb.seed;
}

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": not a number: " + v);
  }
}

long to_long(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const long x = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": not an integer: " + v);
  }
}

uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const uint64_t x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + ": not an unsigned integer: " + v);
  }
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::vector<std::string> unknown;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = unquote(trim(line.substr(eq + 1)));

    if (key == "dataset") cfg.dataset = value;
    else if (key == "schema") cfg.schema_path = value;
    else if (key == "embeddings") cfg.embeddings = value;
    else if (key == "checkpoint") cfg.checkpoint = value;
    else if (key == "predictions") cfg.predictions = value;
    else if (key == "conll") cfg.conll = value;
    else if (key == "out") cfg.out_dir = value;
    else if (key == "lr") cfg.train.lr = to_double(key, value);
    else if (key == "warmup_ratio") cfg.train.warmup_ratio = to_double(key, value);
    else if (key == "weight_decay") cfg.train.weight_decay = to_double(key, value);
    else if (key == "batch_size") cfg.train.batch_size = static_cast<int>(to_long(key, value));
    else if (key == "epochs") cfg.train.epochs = static_cast<int>(to_long(key, value));
    else if (key == "layers") cfg.train.layers = static_cast<int>(to_long(key, value));
    else if (key == "heads") cfg.train.heads = static_cast<int>(to_long(key, value));
    else if (key == "max_span_width") cfg.train.max_span_width = static_cast<int>(to_long(key, value));
    else if (key == "alpha") cfg.train.alpha = to_double(key, value);
    else if (key == "width_dim") cfg.train.width_dim = static_cast<int>(to_long(key, value));
    else if (key == "neg_spans") cfg.train.neg_spans = static_cast<int>(to_long(key, value));
    else if (key == "neg_relations") cfg.train.neg_relations = static_cast<int>(to_long(key, value));
    else if (key == "dim") cfg.train.dim = static_cast<int>(to_long(key, value));
    else if (key == "seed") cfg.train.seed = to_u64(key, value);
    else if (key == "mode") cfg.mode = value;
    else if (key == "criteria") cfg.criteria = split_list(value);
    else if (key == "folds") cfg.folds = static_cast<int>(to_long(key, value));
    else if (key == "max_tokens") cfg.max_tokens = static_cast<int>(to_long(key, value));
    else unknown.push_back(key);
  }
  if (!unknown.empty()) {
    std::string msg = "unknown config keys:";
    for (const auto& k : unknown) msg += " " + k;
    throw ConfigError(msg);
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string config_to_text(const RunConfig& cfg) {
  std::ostringstream out;
  auto str = [&](const char* key, const std::string& v) { out << key << " = \"" << v << "\"\n"; };
  str("dataset", cfg.dataset);
  str("schema", cfg.schema_path);
  str("embeddings", cfg.embeddings);
  str("checkpoint", cfg.checkpoint);
  str("predictions", cfg.predictions);
  str("conll", cfg.conll);
  str("out", cfg.out_dir);
  out << "lr = " << format_double(cfg.train.lr) << "\n";
  out << "warmup_ratio = " << format_double(cfg.train.warmup_ratio) << "\n";
  out << "weight_decay = " << format_double(cfg.train.weight_decay) << "\n";
  out << "batch_size = " << cfg.train.batch_size << "\n";
  out << "epochs = " << cfg.train.epochs << "\n";
  out << "layers = " << cfg.train.layers << "\n";
  out << "heads = " << cfg.train.heads << "\n";
  out << "max_span_width = " << cfg.train.max_span_width << "\n";
  out << "alpha = " << format_double(cfg.train.alpha) << "\n";
  out << "width_dim = " << cfg.train.width_dim << "\n";
  out << "neg_spans = " << cfg.train.neg_spans << "\n";
  out << "neg_relations = " << cfg.train.neg_relations << "\n";
  out << "dim = " << cfg.train.dim << "\n";
  out << "seed = " << cfg.train.seed << "\n";
  str("mode", cfg.mode);
  out << "criteria = ";
  for (size_t i = 0; i < cfg.criteria.size(); ++i) out << (i ? "," : "") << cfg.criteria[i];
  out << "\n";
  out << "folds = " << cfg.folds << "\n";
  out << "max_tokens = " << cfg.max_tokens << "\n";
  return out.str();
}

void validate_config(const RunConfig& cfg, const std::string& command) {
  const auto& t = cfg.train;
  if (t.lr <= 0) throw ConfigError("lr must be positive");
  if (t.warmup_ratio < 0 || t.warmup_ratio > 1) throw ConfigError("warmup_ratio must lie in [0, 1]");
  if (t.weight_decay < 0) throw ConfigError("weight_decay must be non-negative");
  if (t.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (t.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (t.layers < 1) throw ConfigError("layers must be >= 1");
  if (t.heads < 1) throw ConfigError("heads must be >= 1");
  if (t.dim < 1 || t.dim % t.heads != 0) throw ConfigError("dim must be positive and divisible by heads");
  if (t.max_span_width < 1) throw ConfigError("max_span_width must be >= 1");
  if (t.alpha <= 0 || t.alpha >= 1) throw ConfigError("alpha must lie in (0, 1)");
  if (t.width_dim < 1) throw ConfigError("width_dim must be >= 1");
  if (t.neg_spans < 0 || t.neg_relations < 0) throw ConfigError("negative-sample quotas must be >= 0");
  if (cfg.max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
  if (cfg.folds < 0 || cfg.folds == 1) throw ConfigError("folds must be 0 (off) or >= 2");
  if (cfg.mode != "full" && cfg.mode != "no_re_to_ner" && cfg.mode != "no_ner_to_re" &&
      cfg.mode != "none" && cfg.mode != "no_label")
    throw ConfigError("mode must be one of full, no_re_to_ner, no_ner_to_re, none, no_label");
  for (const auto& c : cfg.criteria) criterion_from_string(c);

  auto require = [&](const std::string& value, const char* what) {
    if (value.empty())
      throw ConfigError(std::string("command ") + command + " requires " + what + " in the config");
  };
  for (const std::string& path :
       {cfg.dataset, cfg.schema_path, cfg.embeddings, cfg.checkpoint, cfg.predictions, cfg.conll})
    if (!path.empty() && !std::filesystem::exists(path))
      throw ConfigError("referenced path does not exist: " + path);
  if (command == "train" || command == "ablate") {
    require(cfg.dataset, "dataset");
    require(cfg.schema_path, "schema");
  } else if (command == "evaluate" || command == "analyze") {
    require(cfg.dataset, "dataset");
    require(cfg.schema_path, "schema");
    if (cfg.predictions.empty() && cfg.checkpoint.empty())
      throw ConfigError("command " + command + " requires a checkpoint or a predictions file");
  } else if (command == "predict") {
    require(cfg.dataset, "dataset");
    require(cfg.schema_path, "schema");
    require(cfg.checkpoint, "checkpoint");
  } else if (command == "tags") {
    if (cfg.conll.empty()) {
      require(cfg.dataset, "dataset");
      require(cfg.schema_path, "schema");
    }
  } else if (command == "gradcheck") {
    // self-contained
  } else {
    throw ConfigError("unknown command: " + command);
  }
}

}  // namespace tagspan
