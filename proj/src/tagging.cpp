#include "tagspan/tagging.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>

namespace tagspan {

namespace {

bool is_valid_tag(const std::string& tag) {
  if (tag == "O") return true;
  return tag.size() > 2 && (tag[0] == 'B' || tag[0] == 'I') && tag[1] == '-';
}

std::string bio_tag(char kind, const std::string& type) { return std::string(1, kind) + "-" + type; }

}  // namespace

TokenLabel TokenLabel::parse(const std::string& s) {
  TokenLabel label;
  const auto slash = s.find('/');
  if (slash == std::string::npos) {
    label.primary = s;
  } else {
    label.primary = s.substr(0, slash);
    label.overlay = s.substr(slash + 1);
  }
  if (!is_valid_tag(label.primary) || (!label.overlay.empty() && !is_valid_tag(label.overlay)) ||
      label.overlay == "O")
    throw std::invalid_argument("malformed token label: " + s);
  return label;
}

std::pair<EntityMention, EntityMention> select_preceding(const EntityMention& a, const EntityMention& b) {
  if (!a.overlaps(b)) throw std::invalid_argument("select_preceding: entities do not overlap");
  bool a_first;
  if (a.start != b.start)
    a_first = a.start < b.start;
  else if (a.width() != b.width())
    a_first = a.width() > b.width();
  else
    a_first = a.type <= b.type;
  return a_first ? std::make_pair(a, b) : std::make_pair(b, a);
}

TokenLabelSequence encode_labels(const AnnotatedDocument& doc) {
  const int n = doc.size();
  const auto& ents = doc.entities;

  std::vector<int> coverage(n, 0);
  for (const auto& m : ents) {
    if (m.start < 0 || m.end > n || m.start >= m.end)
      throw std::invalid_argument("encode_labels: entity span out of range");
    for (int i = m.start; i < m.end; ++i) ++coverage[i];
  }
  for (int i = 0; i < n; ++i)
    if (coverage[i] > 2)
      throw std::invalid_argument("encode_labels: overlap at token " + std::to_string(i) +
                                  " is not two-fold");

  // Split entities into a primary and an overlay channel so that entities
  // within one channel never overlap. With at most two-fold coverage the
  // overlap graph of intervals is a forest (three pairwise-overlapping spans
  // would share a token), so a two-coloring always exists; each connected
  // component is anchored at its most-preceding entity, which matches
  // select_preceding on isolated pairs.
  const size_t count = ents.size();
  std::vector<std::vector<size_t>> adjacent(count);
  for (size_t i = 0; i < count; ++i)
    for (size_t j = i + 1; j < count; ++j)
      if (ents[i].overlaps(ents[j])) {
        adjacent[i].push_back(j);
        adjacent[j].push_back(i);
      }

  auto precedes = [&](size_t a, size_t b) {
    if (ents[a].start != ents[b].start) return ents[a].start < ents[b].start;
    if (ents[a].width() != ents[b].width()) return ents[a].width() > ents[b].width();
    return ents[a].type < ents[b].type;
  };

  std::vector<bool> visited(count, false);
  std::vector<int> channel(count, 1);  // 1 = primary, 2 = overlay
  for (size_t seed = 0; seed < count; ++seed) {
    if (visited[seed]) continue;
    std::vector<size_t> component{seed};
    visited[seed] = true;
    for (size_t at = 0; at < component.size(); ++at)
      for (size_t next : adjacent[component[at]])
        if (!visited[next]) {
          visited[next] = true;
          component.push_back(next);
        }
    size_t anchor = component[0];
    for (size_t e : component)
      if (precedes(e, anchor)) anchor = e;

    std::vector<int> color(count, 0);
    color[anchor] = 1;
    std::vector<size_t> queue{anchor};
    for (size_t at = 0; at < queue.size(); ++at) {
      const size_t here = queue[at];
      for (size_t next : adjacent[here]) {
        const int wanted = color[here] == 1 ? 2 : 1;
        if (color[next] == 0) {
          color[next] = wanted;
          queue.push_back(next);
        } else if (color[next] != wanted) {
          throw std::invalid_argument("encode_labels: overlaps cannot be split into two channels");
        }
      }
    }
    for (size_t e : component) channel[e] = color[e];
  }

  TokenLabelSequence labels(n);
  for (size_t e = 0; e < ents.size(); ++e) {
    const auto& m = ents[e];
    for (int i = m.start; i < m.end; ++i) {
      std::string tag = bio_tag(i == m.start ? 'B' : 'I', m.type);
      std::string& slot = channel[e] == 1 ? labels[i].primary : labels[i].overlay;
      if (channel[e] == 1 ? slot != "O" : !slot.empty())
        throw std::invalid_argument("encode_labels: channel collision at token " + std::to_string(i));
      slot = std::move(tag);
    }
  }
  return labels;
}

namespace {

struct ChannelTag {
  char kind = 'O';
  std::string type;
};

ChannelTag split_tag(const std::string& tag) {
  if (tag.empty() || tag == "O") return {};
  return {tag[0], tag.substr(2)};
}

void decode_channel(const std::vector<ChannelTag>& tags, std::set<std::tuple<int, int, std::string>>& out) {
  int open_start = -1;
  std::string open_type;
  auto close = [&](int end) {
    if (open_start >= 0) out.insert({open_start, end, open_type});
    open_start = -1;
  };
  for (size_t i = 0; i < tags.size(); ++i) {
    const auto& t = tags[i];
    if (t.kind == 'O') {
      close(static_cast<int>(i));
    } else if (t.kind == 'B') {
      close(static_cast<int>(i));
      open_start = static_cast<int>(i);
      open_type = t.type;
    } else {  // 'I': extend a matching segment, otherwise repair to a fresh one
      if (open_start < 0 || open_type != t.type) {
        close(static_cast<int>(i));
        open_start = static_cast<int>(i);
        open_type = t.type;
      }
    }
  }
  close(static_cast<int>(tags.size()));
}

}  // namespace

std::vector<EntityMention> decode_labels(const TokenLabelSequence& labels) {
  std::vector<ChannelTag> primary(labels.size()), overlay(labels.size());
  for (size_t i = 0; i < labels.size(); ++i) {
    primary[i] = split_tag(labels[i].primary);
    overlay[i] = split_tag(labels[i].overlay);
  }
  std::set<std::tuple<int, int, std::string>> spans;
  decode_channel(primary, spans);
  decode_channel(overlay, spans);
  std::vector<EntityMention> out;
  out.reserve(spans.size());
  for (const auto& [start, end, type] : spans) out.push_back(EntityMention{start, end, type});
  return out;
}

LabelVocabulary LabelVocabulary::build(const Dataset& dataset) {
  std::set<std::string> seen;
  for (const auto& t : dataset.schema.entity_types) {
    seen.insert(bio_tag('B', t));
    seen.insert(bio_tag('I', t));
  }
  for (const auto& doc : dataset.documents)
    for (const auto& label : encode_labels(doc))
      if (label.str() != "O") seen.insert(label.str());

  LabelVocabulary vocab;
  vocab.labels.push_back("O");
  vocab.labels.insert(vocab.labels.end(), seen.begin(), seen.end());
  for (size_t i = 0; i < vocab.labels.size(); ++i) vocab.ids[vocab.labels[i]] = static_cast<int>(i);
  return vocab;
}

std::string to_conll(const std::vector<std::string>& tokens, const TokenLabelSequence& labels) {
  if (tokens.size() != labels.size())
    throw std::invalid_argument("to_conll: token/label length mismatch");
  std::ostringstream out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].find_first_of("\t\n") != std::string::npos)
      throw std::invalid_argument("to_conll: token contains tab or newline");
    out << tokens[i] << '\t' << labels[i].str() << '\n';
  }
  out << '\n';
  return out.str();
}

std::vector<std::pair<std::vector<std::string>, TokenLabelSequence>> parse_conll(const std::string& text) {
  std::vector<std::pair<std::vector<std::string>, TokenLabelSequence>> sentences;
  std::vector<std::string> tokens;
  TokenLabelSequence labels;
  auto flush = [&] {
    if (!tokens.empty()) {
      sentences.emplace_back(std::move(tokens), std::move(labels));
      tokens.clear();
      labels.clear();
    }
  };
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) {
      flush();
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::invalid_argument("parse_conll: expected token<TAB>label, got: " + line);
    tokens.push_back(line.substr(0, tab));
    labels.push_back(TokenLabel::parse(line.substr(tab + 1)));
  }
  flush();
  return sentences;
}

}  // namespace tagspan
