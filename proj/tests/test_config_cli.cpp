#include <doctest.h>

#include <filesystem>
#include <unistd.h>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "corpus.hpp"
#include "tagspan/runner.hpp"

using namespace tagspan;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("tagspan_test_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name, const std::string& contents) const {
    const fs::path p = path / name;
    std::ofstream out(p, std::ios::binary);
    out << contents;
    return p.string();
  }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("config parsing") {
  SUBCASE("an empty config keeps every documented default") {
    const RunConfig cfg = parse_config_text("");
    CHECK(cfg.train.lr == 5e-5);
    CHECK(cfg.train.warmup_ratio == 0.1);
    CHECK(cfg.train.weight_decay == 1e-2);
    CHECK(cfg.train.batch_size == 4);
    CHECK(cfg.train.epochs == 100);
    CHECK(cfg.train.layers == 3);
    CHECK(cfg.train.heads == 8);
    CHECK(cfg.train.max_span_width == 10);
    CHECK(cfg.train.alpha == 0.4);
    CHECK(cfg.train.width_dim == 150);
    CHECK(cfg.train.neg_spans == 100);
    CHECK(cfg.train.neg_relations == 100);
    CHECK(cfg.max_tokens == 512);
    CHECK(cfg.mode == "full");
  }
  SUBCASE("values, comments and quotes") {
    const RunConfig cfg = parse_config_text(
        "# experiment\n"
        "dataset = \"data/train.json\"  # inline comment\n"
        "lr = 1e-3\n"
        "criteria = ner, re_plus\n"
        "folds = 10\n");
    CHECK(cfg.dataset == "data/train.json");
    CHECK(cfg.train.lr == 1e-3);
    CHECK(cfg.criteria == std::vector<std::string>{"ner", "re_plus"});
    CHECK(cfg.folds == 10);
  }
  SUBCASE("unknown keys are listed in the error") {
    try {
      parse_config_text("lr = 1e-4\nlearning_rate = 3\ncolour = red\n");
      FAIL("expected a config error");
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("learning_rate") != std::string::npos);
      CHECK(msg.find("colour") != std::string::npos);
    }
  }
  SUBCASE("alpha outside (0,1) fails validation") {
    RunConfig cfg = parse_config_text("alpha = 1.5\n");
    CHECK_THROWS_AS(validate_config(cfg, "gradcheck"), ConfigError);
  }
  SUBCASE("save/load round trip") {
    RunConfig cfg;
    cfg.dataset = "d.json";
    cfg.schema_path = "s.json";
    cfg.train.lr = 3.25e-4;
    cfg.train.seed = 987654321;
    cfg.criteria = {"ner"};
    cfg.folds = 5;
    cfg.mode = "none";
    const RunConfig back = parse_config_text(config_to_text(cfg));
    CHECK(back == cfg);
  }
}

TEST_CASE("k-fold assignment partitions the documents") {
  for (const auto [count, folds] : {std::pair{20, 10}, {23, 10}, {7, 3}, {10, 2}}) {
    const auto fold_of = kfold_assignment(count, folds, 42);
    REQUIRE(static_cast<int>(fold_of.size()) == count);
    std::vector<int> sizes(folds, 0);
    for (int f : fold_of) {
      REQUIRE(f >= 0);
      REQUIRE(f < folds);
      ++sizes[f];
    }
    int lo = count, hi = 0;
    for (int s : sizes) {
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
    CHECK(hi - lo <= 1);
  }
  CHECK(kfold_assignment(12, 4, 1) == kfold_assignment(12, 4, 1));
  CHECK(kfold_assignment(12, 4, 1) != kfold_assignment(12, 4, 2));
}

namespace {

RunConfig tiny_run_config(const TempDir& dir, int epochs = 2) {
  const Dataset ds = corpus::templated_corpus(8, 11);
  RunConfig cfg;
  cfg.dataset = dir.file("train.json", dataset_to_json_text(ds));
  cfg.schema_path = dir.file("schema.json", schema_to_json_text(ds.schema));
  cfg.out_dir = dir / "out";
  cfg.train.epochs = epochs;
  cfg.train.dim = 16;
  cfg.train.heads = 2;
  cfg.train.layers = 1;
  cfg.train.width_dim = 8;
  cfg.train.neg_spans = 10;
  cfg.train.neg_relations = 10;
  cfg.train.seed = 7;
  return cfg;
}

}  // namespace

TEST_CASE("cli commands run end to end on a tiny corpus") {
  TempDir dir;
  RunConfig cfg = tiny_run_config(dir);
  std::ostringstream out, err;

  SUBCASE("train then evaluate, predict, analyze, tags") {
    REQUIRE(run_command("train", cfg, out, err) == 0);
    REQUIRE(fs::exists(fs::path(cfg.out_dir) / "checkpoint.json"));
    REQUIRE(fs::exists(fs::path(cfg.out_dir) / "train_log.jsonl"));
    {
      std::ifstream log(fs::path(cfg.out_dir) / "train_log.jsonl");
      std::string line;
      int lines = 0;
      while (std::getline(log, line)) {
        const auto j = nlohmann::json::parse(line);
        CHECK(j.contains("epoch"));
        CHECK(j.contains("joint_loss"));
        CHECK(j.contains("lr"));
        CHECK(j.contains("wall_time_s"));
        ++lines;
      }
      CHECK(lines == 2);
    }

    cfg.checkpoint = (fs::path(cfg.out_dir) / "checkpoint.json").string();
    REQUIRE(run_command("predict", cfg, out, err) == 0);
    REQUIRE(fs::exists(fs::path(cfg.out_dir) / "predictions.json"));

    REQUIRE(run_command("evaluate", cfg, out, err) == 0);
    for (const char* name :
         {"metrics_ner_micro.json", "metrics_re_micro.json", "metrics_re_plus_macro.json"})
      CHECK(fs::exists(fs::path(cfg.out_dir) / name));

    // scoring the written predictions file reproduces the checkpoint-driven metrics
    {
      auto read = [](const fs::path& p) {
        std::ostringstream ss;
        ss << std::ifstream(p).rdbuf();
        return ss.str();
      };
      const std::string via_model = read(fs::path(cfg.out_dir) / "metrics_ner_micro.json");
      RunConfig from_file = cfg;
      from_file.predictions = (fs::path(cfg.out_dir) / "predictions.json").string();
      from_file.out_dir = dir / "out_from_file";
      REQUIRE(run_command("evaluate", from_file, out, err) == 0);
      CHECK(read(fs::path(from_file.out_dir) / "metrics_ner_micro.json") == via_model);
    }

    REQUIRE(run_command("analyze", cfg, out, err) == 0);
    CHECK(fs::exists(fs::path(cfg.out_dir) / "analysis_text_length_ner.json"));
    {
      const auto j = nlohmann::json::parse(
          std::ifstream(fs::path(cfg.out_dir) / "analysis_entity_length.json"));
      CHECK(j.contains("criterion"));
      CHECK(j["buckets"].contains("[1-2]"));
      CHECK(j["buckets"].contains("[9-10]"));
    }

    REQUIRE(run_command("tags", cfg, out, err) == 0);
    CHECK(fs::exists(fs::path(cfg.out_dir) / "labels.conll"));

    // read the emitted conll back
    RunConfig read_cfg = cfg;
    read_cfg.conll = (fs::path(cfg.out_dir) / "labels.conll").string();
    std::ostringstream conll_out;
    REQUIRE(run_command("tags", read_cfg, conll_out, err) == 0);
    const auto decoded = nlohmann::json::parse(conll_out.str());
    CHECK(decoded.size() == 8);
  }

  SUBCASE("evaluating an empty predictions file yields zero recall and exit 0") {
    cfg.predictions = dir.file("empty.json", "[]\n");
    cfg.criteria = {"ner"};
    const int code = run_command("evaluate", cfg, out, err);
    CHECK(code == 0);
    const auto report = nlohmann::json::parse(
        std::ifstream(fs::path(cfg.out_dir) / "metrics_ner_micro.json"));
    CHECK(report["overall"]["r"] == 0.0);
    CHECK(report["overall"]["tp"] == 0);
  }

  SUBCASE("missing required paths exit with code 2") {
    RunConfig bad;
    const int code = run_command("train", bad, out, err);
    CHECK(code == 2);
    CHECK(err.str().find("config error") != std::string::npos);
  }

  SUBCASE("a missing referenced path is a config error") {
    cfg.dataset = dir / "does_not_exist.json";
    CHECK(run_command("train", cfg, out, err) == 2);
  }

  SUBCASE("runtime failures exit with code 1") {
    cfg.dataset = dir.file("broken.json", "this is not json");
    CHECK(run_command("train", cfg, out, err) == 1);
  }

  SUBCASE("unknown command exits with code 2") {
    CHECK(run_command("transmogrify", cfg, out, err) == 2);
  }
}

TEST_CASE("training from precomputed sub-token embeddings") {
  TempDir dir;
  RunConfig cfg = tiny_run_config(dir, 2);
  const Dataset ds = parse_dataset(cfg.dataset, load_schema(cfg.schema_path));

  // two sub-tokens for the first token of every document, one for the rest
  std::ostringstream jsonl;
  Rng rng(88);
  for (size_t d = 0; d < ds.documents.size(); ++d) {
    const int n = ds.documents[d].size();
    nlohmann::json rec;
    rec["doc_id"] = d;
    rec["dim"] = cfg.train.dim;
    std::vector<int> groups(n, 1);
    groups[0] = 2;
    rec["groups"] = groups;
    auto vectors = nlohmann::json::array();
    for (int r = 0; r < n + 1; ++r) {
      auto row = nlohmann::json::array();
      for (int c = 0; c < cfg.train.dim; ++c) row.push_back(rng.next_symmetric(1.0));
      vectors.push_back(row);
    }
    rec["vectors"] = vectors;
    jsonl << rec.dump() << "\n";
  }
  cfg.embeddings = dir.file("embeddings.jsonl", jsonl.str());

  std::ostringstream out, err;
  REQUIRE(run_command("train", cfg, out, err) == 0);
  REQUIRE(run_command("evaluate", cfg, out, err) == 0);

  SUBCASE("a record count mismatch is a runtime error") {
    RunConfig bad = cfg;
    bad.embeddings = dir.file("short.jsonl", jsonl.str().substr(0, jsonl.str().find('\n') + 1));
    bad.out_dir = dir / "out_bad";
    CHECK(run_command("train", bad, out, err) == 1);
  }
}

TEST_CASE("cross-validation covers every document exactly once") {
  TempDir dir;
  RunConfig cfg = tiny_run_config(dir, 1);
  cfg.folds = 4;
  cfg.criteria = {"ner"};
  std::ostringstream out, err;
  REQUIRE(run_command("train", cfg, out, err) == 0);
  for (int fold = 0; fold < 4; ++fold)
    CHECK(fs::exists(fs::path(cfg.out_dir) / ("fold" + std::to_string(fold) + "_metrics.json")));
  CHECK(fs::exists(fs::path(cfg.out_dir) / "cv_summary.json"));
}

TEST_CASE("gradcheck command reports per mode") {
  RunConfig cfg;
  std::ostringstream out, err;
  // the full-scale gradcheck is exercised by the acceptance suite;
  // here only the command wiring is checked via config validation
  CHECK_NOTHROW(validate_config(cfg, "gradcheck"));
}

TEST_CASE("ablate runs all five variants") {
  TempDir dir;
  RunConfig cfg = tiny_run_config(dir, 1);
  cfg.train.epochs = 1;
  std::ostringstream out, err;
  REQUIRE(run_command("ablate", cfg, out, err) == 0);
  const auto table = nlohmann::json::parse(std::ifstream(fs::path(cfg.out_dir) / "ablation.json"));
  REQUIRE(table.size() == 5);
  std::set<std::string> variants;
  for (const auto& row : table) variants.insert(row["variant"].get<std::string>());
  CHECK(variants ==
        std::set<std::string>{"full", "no_label", "no_re_to_ner", "no_ner_to_re", "none"});
}
