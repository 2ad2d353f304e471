#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "tagspan/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Joint entity and relation extraction with a tag-augmented span model"};
  app.require_subcommand(1);

  std::string config_path;
  std::string mode;
  std::string out_dir;
  std::vector<std::string> criteria;
  int64_t seed = -1;
  int folds = -1;

  std::vector<CLI::App*> commands;
  for (const char* name : {"train", "evaluate", "predict", "ablate", "analyze", "gradcheck", "tags"}) {
    CLI::App* cmd = app.add_subcommand(name);
    cmd->add_option("--config", config_path, "config file (key = value lines)");
    cmd->add_option("--seed", seed, "override the config seed");
    cmd->add_option("--mode", mode,
                    "override the model variant: full, no_re_to_ner, no_ner_to_re, none, no_label");
    cmd->add_option("--criterion", criteria, "override the evaluation criteria (repeatable)");
    cmd->add_option("--folds", folds, "override the cross-validation fold count");
    cmd->add_option("--out", out_dir, "override the output directory");
    commands.push_back(cmd);
  }

  CLI11_PARSE(app, argc, argv);

  tagspan::RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = tagspan::load_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  // flags win over file values
  if (seed >= 0) cfg.train.seed = static_cast<uint64_t>(seed);
  if (!mode.empty()) cfg.mode = mode;
  if (!criteria.empty()) cfg.criteria = criteria;
  if (folds >= 0) cfg.folds = folds;
  if (!out_dir.empty()) cfg.out_dir = out_dir;

  const std::string command = app.get_subcommands().front()->get_name();
  return tagspan::run_command(command, cfg, std::cout, std::cerr);
}
