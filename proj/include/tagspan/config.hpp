#pragma once

#include <string>
#include <vector>

#include "tagspan/training.hpp"

namespace tagspan {

// One flat key = value config file drives every command; command-line flags
// override file values.
struct RunConfig {
  std::string dataset;
  std::string schema_path;
  std::string embeddings;   // optional precomputed sub-token embeddings (JSONL)
  std::string checkpoint;   // written by train, read by evaluate/predict/analyze
  std::string predictions;  // optional: score an existing predictions file
  std::string conll;        // optional: CoNLL file for the tags command to read back
  std::string out_dir = "out";
  TrainConfig train;
  std::string mode = "full";  // full | no_re_to_ner | no_ner_to_re | none | no_label
  std::vector<std::string> criteria = {"ner", "re", "re_plus"};
  int folds = 0;  // 0 disables cross-validation
  int max_tokens = 512;

  friend bool operator==(const RunConfig&, const RunConfig&);
};

RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);
std::string config_to_text(const RunConfig& cfg);

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Value ranges plus per-command required paths. Throws ConfigError.
void validate_config(const RunConfig& cfg, const std::string& command);

}  // namespace tagspan
