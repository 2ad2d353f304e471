#include <doctest.h>

#include <algorithm>
#include <set>

#include "tagspan/rng.hpp"
#include "corpus.hpp"
#include "tagspan/tagging.hpp"

using namespace tagspan;

namespace {

std::vector<std::string> label_strings(const TokenLabelSequence& labels) {
  std::vector<std::string> out;
  for (const auto& l : labels) out.push_back(l.str());
  return out;
}

TokenLabelSequence labels_from_strings(const std::vector<std::string>& strings) {
  TokenLabelSequence out;
  for (const auto& s : strings) out.push_back(TokenLabel::parse(s));
  return out;
}

using SpanSet = std::set<std::tuple<int, int, std::string>>;

SpanSet span_set(const std::vector<EntityMention>& mentions) {
  SpanSet out;
  for (const auto& m : mentions) out.insert({m.start, m.end, m.type});
  return out;
}

// Independent finite-state BIO decoder used as the oracle for repair rules:
// states are (open segment type, start); transitions follow the conservative
// repair convention.
SpanSet fsm_decode_channel(const std::vector<std::string>& tags) {
  SpanSet out;
  std::string open_type;
  int open_start = -1;
  for (int i = 0; i <= static_cast<int>(tags.size()); ++i) {
    const std::string tag = i < static_cast<int>(tags.size()) ? tags[i] : "O";
    const char kind = tag[0];
    const std::string type = tag == "O" ? "" : tag.substr(2);
    const bool continues = kind == 'I' && open_start >= 0 && type == open_type;
    if (!continues && open_start >= 0) {
      out.insert({open_start, i, open_type});
      open_start = -1;
    }
    if (kind == 'B' || (kind == 'I' && !continues)) {
      open_start = i;
      open_type = type;
    }
  }
  return out;
}

SpanSet fsm_decode(const TokenLabelSequence& labels) {
  std::vector<std::string> primary, overlay;
  for (const auto& l : labels) {
    primary.push_back(l.primary);
    overlay.push_back(l.overlay.empty() ? "O" : l.overlay);
  }
  SpanSet out = fsm_decode_channel(primary);
  for (const auto& s : fsm_decode_channel(overlay)) out.insert(s);
  return out;
}

}  // namespace

TEST_CASE("select_preceding") {
  const EntityMention codeine_intox{0, 2, "AE"};
  const EntityMention codeine{0, 1, "DRUG"};

  SUBCASE("longer entity wins on equal heads") {
    const auto [preceding, overlapping] = select_preceding(codeine, codeine_intox);
    CHECK(preceding == codeine_intox);
    CHECK(overlapping == codeine);
  }
  SUBCASE("earlier head wins") {
    const EntityMention a{2, 6, "X"};
    const EntityMention b{5, 7, "Y"};
    CHECK(select_preceding(a, b).first == a);
    CHECK(select_preceding(b, a).first == a);
  }
  SUBCASE("identical spans fall back to the type order") {
    const EntityMention x{0, 2, "AE"};
    const EntityMention y{0, 2, "DRUG"};
    CHECK(select_preceding(x, y).first == x);
    CHECK(select_preceding(y, x).first == x);
  }
  SUBCASE("antisymmetric under argument swap") {
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
      const int s1 = static_cast<int>(rng.next_below(6));
      const int w1 = 1 + static_cast<int>(rng.next_below(4));
      const int s2 = static_cast<int>(rng.next_below(6));
      const int w2 = 1 + static_cast<int>(rng.next_below(4));
      const EntityMention a{s1, s1 + w1, rng.next_below(2) ? "T1" : "T2"};
      const EntityMention b{s2, s2 + w2, rng.next_below(2) ? "T1" : "T2"};
      if (!a.overlaps(b)) {
        CHECK_THROWS(select_preceding(a, b));
        continue;
      }
      const auto ab = select_preceding(a, b);
      const auto ba = select_preceding(b, a);
      CHECK(ab.first == ba.first);
      CHECK(ab.second == ba.second);
    }
  }
}

TEST_CASE("encode_labels") {
  SUBCASE("two-fold nested overlap uses a composite label") {
    AnnotatedDocument doc;
    doc.tokens = {"Codeine", "intoxication"};
    doc.entities = {EntityMention{0, 2, "AE"}, EntityMention{0, 1, "DRUG"}};
    CHECK(label_strings(encode_labels(doc)) == std::vector<std::string>{"B-AE/B-DRUG", "I-AE"});
  }
  SUBCASE("plain sentence with three entities") {
    AnnotatedDocument doc;
    doc.tokens = {"Judith", "Toth",  "says", "she",        "returned", "for",  "a",
                  "fourth", "term",  "in",   "Maryland's", "House",    "of",   "Delegates"};
    doc.entities = {EntityMention{0, 2, "PER"}, EntityMention{10, 11, "LOC"},
                    EntityMention{11, 14, "ORG"}};
    CHECK(label_strings(encode_labels(doc)) ==
          std::vector<std::string>{"B-PER", "I-PER", "O", "O", "O", "O", "O", "O", "O", "O", "B-LOC",
                                   "B-ORG", "I-ORG", "I-ORG"});
  }
  SUBCASE("no entities means all O") {
    AnnotatedDocument doc;
    doc.tokens = {"just", "words"};
    CHECK(label_strings(encode_labels(doc)) == std::vector<std::string>{"O", "O"});
  }
  SUBCASE("three-fold overlap is rejected") {
    AnnotatedDocument doc;
    doc.tokens = {"a", "b", "c"};
    doc.entities = {EntityMention{0, 3, "X"}, EntityMention{0, 2, "Y"}, EntityMention{1, 3, "Z"}};
    CHECK_THROWS_WITH_AS(encode_labels(doc), doctest::Contains("not two-fold"), std::invalid_argument);
  }
  SUBCASE("crossing overlap keeps the overlay over its full range") {
    AnnotatedDocument doc;
    doc.tokens = {"a", "b", "c", "d"};
    doc.entities = {EntityMention{0, 2, "X"}, EntityMention{1, 3, "Y"}};
    CHECK(label_strings(encode_labels(doc)) ==
          std::vector<std::string>{"B-X", "I-X/B-Y", "O/I-Y", "O"});
  }
}

TEST_CASE("decode_labels") {
  SUBCASE("inverse of the composite example") {
    const auto decoded = decode_labels(labels_from_strings({"B-AE/B-DRUG", "I-AE"}));
    CHECK(span_set(decoded) == SpanSet{{0, 2, "AE"}, {0, 1, "DRUG"}});
  }
  SUBCASE("all O decodes to nothing") {
    CHECK(decode_labels(labels_from_strings({"O", "O", "O"})).empty());
  }
  SUBCASE("dangling I tags are repaired to a fresh segment") {
    const auto decoded = decode_labels(labels_from_strings({"I-PER", "I-PER"}));
    CHECK(span_set(decoded) == SpanSet{{0, 2, "PER"}});
    CHECK(span_set(decoded) == fsm_decode(labels_from_strings({"I-PER", "I-PER"})));
  }
  SUBCASE("type change inside an I run closes the previous entity") {
    const auto labels = labels_from_strings({"B-A", "I-B", "I-B", "O"});
    CHECK(span_set(decode_labels(labels)) == SpanSet{{0, 1, "A"}, {1, 3, "B"}});
    CHECK(span_set(decode_labels(labels)) == fsm_decode(labels));
  }
  SUBCASE("random sequences agree with the finite-state oracle") {
    Rng rng(17);
    const std::vector<std::string> tags{"O", "B-P", "I-P", "B-Q", "I-Q"};
    for (int trial = 0; trial < 500; ++trial) {
      TokenLabelSequence labels;
      const int n = 1 + static_cast<int>(rng.next_below(10));
      for (int i = 0; i < n; ++i) {
        TokenLabel l;
        l.primary = tags[rng.next_below(tags.size())];
        if (rng.next_below(4) == 0) l.overlay = tags[1 + rng.next_below(tags.size() - 1)];
        labels.push_back(l);
      }
      CHECK(span_set(decode_labels(labels)) == fsm_decode(labels));
    }
  }
}

TEST_CASE("round trip and repair idempotence properties") {
  Rng rng(99);

  SUBCASE("decode(encode(doc)) recovers the exact entity set") {
    for (int trial = 0; trial < 400; ++trial) {
      const AnnotatedDocument doc = corpus::random_two_fold_document(rng);
      const auto decoded = decode_labels(encode_labels(doc));
      CHECK(span_set(decoded) == span_set(doc.entities));
    }
  }
  SUBCASE("decode(encode(decode(L))) == decode(L) for arbitrary label sequences") {
    const std::vector<std::string> tags{"O", "B-P", "I-P", "B-Q", "I-Q"};
    for (int trial = 0; trial < 400; ++trial) {
      TokenLabelSequence labels;
      const int n = 1 + static_cast<int>(rng.next_below(12));
      for (int i = 0; i < n; ++i) {
        TokenLabel l;
        l.primary = tags[rng.next_below(tags.size())];
        if (rng.next_below(3) == 0) l.overlay = tags[1 + rng.next_below(tags.size() - 1)];
        labels.push_back(l);
      }
      const auto first = decode_labels(labels);
      AnnotatedDocument doc;
      for (int i = 0; i < n; ++i) doc.tokens.push_back("t");
      doc.entities = first;
      const auto second = decode_labels(encode_labels(doc));
      CHECK(span_set(second) == span_set(first));
    }
  }
  SUBCASE("overlay stays inside the preceding entity for nested pairs") {
    for (int trial = 0; trial < 200; ++trial) {
      const AnnotatedDocument doc = corpus::random_two_fold_document(rng);
      const auto labels = encode_labels(doc);
      // for every nested pair, tokens outside any primary entity carry no overlay
      for (size_t i = 0; i < labels.size(); ++i) {
        bool in_primary = labels[i].primary != "O";
        if (!in_primary && !labels[i].overlay.empty()) {
          // only crossing overlaps may extend the overlay past the preceding
          // entity; nested generation keeps inner spans inside outer ones
          bool crossing_possible = false;
          for (const auto& a : doc.entities)
            for (const auto& b : doc.entities)
              if (a.overlaps(b) && a.start < b.start && a.end < b.end) crossing_possible = true;
          CHECK(crossing_possible);
        }
      }
    }
  }
}

TEST_CASE("label vocabulary") {
  SUBCASE("two types without overlaps give five labels in stable order") {
    Dataset ds;
    ds.schema.entity_types = {"PER", "ORG"};
    const LabelVocabulary vocab = LabelVocabulary::build(ds);
    CHECK(vocab.labels == std::vector<std::string>{"O", "B-ORG", "B-PER", "I-ORG", "I-PER"});
    CHECK(vocab.size() == 5);
    CHECK(vocab.index("O") == 0);
    CHECK(vocab.index("missing") == -1);
  }
  SUBCASE("no entity types leaves only O") {
    Dataset ds;
    const LabelVocabulary vocab = LabelVocabulary::build(ds);
    CHECK(vocab.labels == std::vector<std::string>{"O"});
  }
  SUBCASE("observed composites join the vocabulary") {
    Dataset ds;
    ds.schema.entity_types = {"AE", "DRUG"};
    AnnotatedDocument doc;
    doc.tokens = {"Codeine", "intoxication"};
    doc.entities = {EntityMention{0, 2, "AE"}, EntityMention{0, 1, "DRUG"}};
    ds.documents.push_back(doc);
    const LabelVocabulary vocab = LabelVocabulary::build(ds);
    CHECK(vocab.size() == 6);
    CHECK(vocab.index("B-AE/B-DRUG") >= 0);
    // independent oracle: count distinct encoded label strings over the corpus
    std::set<std::string> distinct{"O", "B-AE", "I-AE", "B-DRUG", "I-DRUG"};
    for (const auto& d : ds.documents)
      for (const auto& l : encode_labels(d)) distinct.insert(l.str());
    CHECK(vocab.size() == static_cast<int>(distinct.size()));
  }
}

TEST_CASE("conll text round trips") {
  AnnotatedDocument doc;
  doc.tokens = {"Codeine", "intoxication", "followed"};
  doc.entities = {EntityMention{0, 2, "AE"}, EntityMention{0, 1, "DRUG"}};
  const auto labels = encode_labels(doc);
  const std::string text = to_conll(doc.tokens, labels);
  const auto sentences = parse_conll(text + to_conll(doc.tokens, labels));
  REQUIRE(sentences.size() == 2);
  CHECK(sentences[0].first == doc.tokens);
  CHECK(sentences[0].second == labels);
  CHECK_THROWS(parse_conll("token-without-label\n"));
}
