#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tagspan/matrix.hpp"

namespace tagspan {

struct EmbedderConfig {
  enum class Mode { toy, precomputed };
  int dim = 64;
  uint64_t seed = 1;
  Mode mode = Mode::toy;
};

// Deterministic stand-in for a contextual encoder: each token string hashes
// to a fixed pseudo-random vector in [-1, 1]^d, plus a sinusoidal position
// encoding. Pure function of (token, position, seed, dim).
Matrix toy_embed(const std::vector<std::string>& tokens, const EmbedderConfig& cfg);

// Sub-token embeddings for one document plus the contiguous grouping that
// maps them back onto tokens: group_sizes[i] sub-token rows belong to token i.
struct SubtokenEmbeddings {
  Matrix vectors;                // len x dim
  std::vector<int> group_sizes;  // one per token, each >= 1, summing to len
};

// Token i = element-wise max over its sub-token rows.
Matrix align_subtokens(const SubtokenEmbeddings& sub);

// JSONL import of externally precomputed sub-token embeddings, one record per
// document: {"doc_id": int, "dim": int, "groups": [...], "vectors": [[...]]}.
// Records must arrive in doc_id order 0..k-1 and match expected_dim.
std::vector<SubtokenEmbeddings> load_precomputed(const std::string& path, int expected_dim);

// Pairing check against a document's token count.
void check_alignment(const SubtokenEmbeddings& sub, int token_count, int doc_index);

}  // namespace tagspan
