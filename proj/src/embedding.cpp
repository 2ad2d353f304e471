#include "tagspan/embedding.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "tagspan/data.hpp"
#include "tagspan/rng.hpp"

namespace tagspan {

Matrix toy_embed(const std::vector<std::string>& tokens, const EmbedderConfig& cfg) {
  if (cfg.dim <= 0) throw std::invalid_argument("toy_embed: dim must be positive");
  if (cfg.mode != EmbedderConfig::Mode::toy)
    throw std::invalid_argument("toy_embed: config is not in toy mode");
  const int n = static_cast<int>(tokens.size());
  const int d = cfg.dim;
  Matrix out(n, d);
  for (int i = 0; i < n; ++i) {
    Rng rng(hash_string(tokens[i], cfg.seed));
    for (int j = 0; j < d; ++j) out(i, j) = rng.next_symmetric(1.0);
    // sinusoidal position encoding, sin on even and cos on odd components
    for (int j = 0; j < d; ++j) {
      const double freq = std::pow(10000.0, -2.0 * (j / 2) / d);
      out(i, j) += (j % 2 == 0) ? std::sin(i * freq) : std::cos(i * freq);
    }
  }
  return out;
}

Matrix align_subtokens(const SubtokenEmbeddings& sub) {
  const int n = static_cast<int>(sub.group_sizes.size());
  const int d = sub.vectors.cols();
  int total = 0;
  for (int g : sub.group_sizes) {
    if (g <= 0) throw std::invalid_argument("align_subtokens: empty sub-token group");
    total += g;
  }
  if (total != sub.vectors.rows())
    throw std::invalid_argument("align_subtokens: grouping is not a partition of the rows");
  Matrix out(n, d);
  int row = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) out(i, j) = sub.vectors(row, j);
    for (int k = 1; k < sub.group_sizes[i]; ++k)
      for (int j = 0; j < d; ++j) out(i, j) = std::max(out(i, j), sub.vectors(row + k, j));
    row += sub.group_sizes[i];
  }
  return out;
}

std::vector<SubtokenEmbeddings> load_precomputed(const std::string& path, int expected_dim) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open embeddings file: " + path);
  std::vector<SubtokenEmbeddings> result;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("embeddings line " + std::to_string(line_no) + ": " + e.what());
    }
    const int doc_id = rec.at("doc_id").get<int>();
    if (doc_id != static_cast<int>(result.size()))
      throw ParseError("embeddings line " + std::to_string(line_no) + ": doc_id " +
                       std::to_string(doc_id) + " out of order");
    const int dim = rec.at("dim").get<int>();
    if (dim != expected_dim)
      throw ParseError("embeddings doc " + std::to_string(doc_id) + ": dimension " +
                           std::to_string(dim) + " does not match expected " + std::to_string(expected_dim),
                       doc_id);
    SubtokenEmbeddings sub;
    sub.group_sizes = rec.at("groups").get<std::vector<int>>();
    const auto& vecs = rec.at("vectors");
    sub.vectors.resize(static_cast<int>(vecs.size()), dim);
    for (size_t r = 0; r < vecs.size(); ++r) {
      if (static_cast<int>(vecs[r].size()) != dim)
        throw ParseError("embeddings doc " + std::to_string(doc_id) + ": ragged vector row", doc_id);
      for (int c = 0; c < dim; ++c) sub.vectors(static_cast<int>(r), c) = vecs[r][c].get<double>();
    }
    int total = 0;
    for (int g : sub.group_sizes) {
      if (g <= 0) throw ParseError("embeddings doc " + std::to_string(doc_id) + ": empty group", doc_id);
      total += g;
    }
    if (total != sub.vectors.rows())
      throw ParseError("embeddings doc " + std::to_string(doc_id) + ": grouping not a partition", doc_id);
    result.push_back(std::move(sub));
  }
  return result;
}

void check_alignment(const SubtokenEmbeddings& sub, int token_count, int doc_index) {
  if (static_cast<int>(sub.group_sizes.size()) != token_count)
    throw ParseError("embeddings doc " + std::to_string(doc_index) + ": " +
                         std::to_string(sub.group_sizes.size()) + " groups for " +
                         std::to_string(token_count) + " tokens",
                     doc_index);
}

}  // namespace tagspan
