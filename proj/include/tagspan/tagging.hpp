#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tagspan/data.hpp"

namespace tagspan {

// One token's label. The primary channel carries ordinary BIO tags; for a
// two-fold overlapping pair the non-preceding entity's tags ride along in the
// overlay channel, rendered as "<primary>/<overlay>".
struct TokenLabel {
  std::string primary = "O";
  std::string overlay;  // empty when absent

  std::string str() const { return overlay.empty() ? primary : primary + "/" + overlay; }
  static TokenLabel parse(const std::string& s);

  friend bool operator==(const TokenLabel& a, const TokenLabel& b) {
    return a.primary == b.primary && a.overlay == b.overlay;
  }
};

using TokenLabelSequence = std::vector<TokenLabel>;

// Of two overlapping entities, the one with the earlier head token precedes;
// equal heads fall to the longer entity, then to the smaller type name so the
// choice never depends on argument order. Throws if the spans are disjoint.
std::pair<EntityMention, EntityMention> select_preceding(const EntityMention& a, const EntityMention& b);

// Entity annotations -> per-token labels. Requires every overlap to be
// two-fold (no token inside more than two entities) and the preceding/overlay
// channel assignment to be consistent; throws otherwise.
TokenLabelSequence encode_labels(const AnnotatedDocument& doc);

// Total inverse: decodes both channels independently with conservative BIO
// repair (a dangling I-tag opens a segment, a type change inside an I-run
// closes the previous one). Returns mentions sorted by (start, end, type).
std::vector<EntityMention> decode_labels(const TokenLabelSequence& labels);

struct LabelVocabulary {
  std::vector<std::string> labels;  // "O" first, the rest lexicographic
  std::unordered_map<std::string, int> ids;

  int size() const { return static_cast<int>(labels.size()); }
  int index(const std::string& label) const {
    auto it = ids.find(label);
    return it == ids.end() ? -1 : it->second;
  }

  // {"O"} + {B-t, I-t} for every schema entity type + every composite string
  // the corpus actually produces under encode_labels.
  static LabelVocabulary build(const Dataset& dataset);
};

// CoNLL-style two-column (token <TAB> label) text; sentences separated by a
// blank line.
std::string to_conll(const std::vector<std::string>& tokens, const TokenLabelSequence& labels);
std::vector<std::pair<std::vector<std::string>, TokenLabelSequence>> parse_conll(const std::string& text);

}  // namespace tagspan
