#include <doctest.h>

#include <algorithm>
#include <set>

#include "oracles.hpp"
#include "tagspan/heads.hpp"

using namespace tagspan;

namespace {

long oracle_span_count(int n, int max_width) {
  long count = 0;
  for (int start = 0; start < n; ++start)
    for (int end = start + 1; end <= n; ++end)
      if (end - start <= max_width) ++count;
  return count;
}

struct HeadFixture {
  ParamStore store;
  HeadParams params;
  int d, dw, max_width;

  HeadFixture(int d, int dw, int max_width, int labels, int etypes, int rtypes, uint64_t seed = 5)
      : d(d), dw(dw), max_width(max_width) {
    Rng rng(seed);
    params = HeadParams::create(store, d, dw, max_width, labels, etypes, rtypes, rng);
  }
};

}  // namespace

TEST_CASE("enumerate_spans") {
  SUBCASE("counts match the double-loop oracle exhaustively") {
    for (int n = 1; n <= 50; ++n)
      for (int eps = 1; eps <= 12; ++eps)
        CHECK(static_cast<long>(enumerate_spans(n, eps).size()) == oracle_span_count(n, eps));
  }
  SUBCASE("hand counts") {
    CHECK(enumerate_spans(4, 2).size() == 7);
    CHECK(enumerate_spans(1, 10).size() == 1);
    CHECK(enumerate_spans(3, 10).size() == 6);
  }
  SUBCASE("(start, width) lexicographic order, widths within bounds") {
    const auto spans = enumerate_spans(6, 3);
    for (size_t i = 1; i < spans.size(); ++i) CHECK(spans[i - 1] < spans[i]);
    for (const auto& s : spans) {
      CHECK(s.width >= 1);
      CHECK(s.width <= 3);
      CHECK(s.end() <= 6);
    }
  }
}

TEST_CASE("tag probabilities are a row softmax") {
  HeadFixture f(4, 3, 5, 6, 2, 2);
  tagspan::Rng rng(8);

  SUBCASE("zero weights give the uniform distribution") {
    f.store[f.params.tag_w].value.fill(0.0);
    Tape t;
    ParamBinder bind(t, f.store);
    const Matrix& probs = t.value(tag_probabilities(t, t.leaf(oracle::random_matrix(3, 4, rng)),
                                                    f.params, bind));
    for (int i = 0; i < probs.rows(); ++i)
      for (int j = 0; j < probs.cols(); ++j)
        CHECK(probs(i, j) == doctest::Approx(1.0 / 6).epsilon(1e-12));
  }
  SUBCASE("rows sum to one and match a scalar softmax oracle") {
    Tape t;
    ParamBinder bind(t, f.store);
    const Matrix h = oracle::random_matrix(5, 4, rng);
    const Matrix& probs = t.value(tag_probabilities(t, t.leaf(h), f.params, bind));
    Matrix logits = oracle::matmul(h, f.store[f.params.tag_w].value);
    for (int i = 0; i < logits.rows(); ++i)
      for (int j = 0; j < logits.cols(); ++j) logits(i, j) += f.store[f.params.tag_b].value(0, j);
    const Matrix expect = oracle::softmax_rows(logits);
    for (int i = 0; i < probs.rows(); ++i) {
      double sum = 0.0;
      for (int j = 0; j < probs.cols(); ++j) {
        CHECK(probs(i, j) == doctest::Approx(expect(i, j)).epsilon(1e-12));
        sum += probs(i, j);
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("span representations") {
  HeadFixture f(3, 2, 4, 5, 2, 1);
  tagspan::Rng rng(9);
  const Matrix h = oracle::random_matrix(6, 3, rng);

  SUBCASE("width-1 span repeats its single token row") {
    Tape t;
    ParamBinder bind(t, f.store);
    const Matrix& reps =
        t.value(span_representations(t, t.leaf(h), f.params, bind, {SpanCandidate{2, 1}}));
    REQUIRE(reps.cols() == 2 * 3 + 2);
    for (int j = 0; j < 3; ++j) {
      CHECK(reps(0, j) == h(2, j));
      CHECK(reps(0, 3 + j) == h(2, j));
    }
    for (int j = 0; j < 2; ++j) CHECK(reps(0, 6 + j) == f.store[f.params.width_table].value(0, j));
  }
  SUBCASE("width-3 span at 2 picks rows 2 and 4 and width row 2") {
    Tape t;
    ParamBinder bind(t, f.store);
    const Matrix& reps =
        t.value(span_representations(t, t.leaf(h), f.params, bind, {SpanCandidate{2, 3}}));
    for (int j = 0; j < 3; ++j) {
      CHECK(reps(0, j) == h(2, j));
      CHECK(reps(0, 3 + j) == h(4, j));
    }
    for (int j = 0; j < 2; ++j) CHECK(reps(0, 6 + j) == f.store[f.params.width_table].value(2, j));
  }
  SUBCASE("spans wider than the table are rejected") {
    Tape t;
    ParamBinder bind(t, f.store);
    CHECK_THROWS(span_representations(t, t.leaf(h), f.params, bind, {SpanCandidate{0, 5}}));
  }
}

TEST_CASE("span classification") {
  HeadFixture f(3, 2, 4, 5, 3, 1);
  tagspan::Rng rng(10);

  SUBCASE("zero weights mean a uniform posterior over types plus none") {
    f.store[f.params.span_w].value.fill(0.0);
    Tape t;
    ParamBinder bind(t, f.store);
    const auto spans = enumerate_spans(4, 4);
    const int reps = span_representations(t, t.leaf(oracle::random_matrix(4, 3, rng)), f.params,
                                          bind, spans);
    const Matrix& post = t.value(span_posteriors(t, reps, f.params, bind));
    CHECK(post.cols() == 4);
    for (int i = 0; i < post.rows(); ++i)
      for (int j = 0; j < post.cols(); ++j) CHECK(post(i, j) == doctest::Approx(0.25).epsilon(1e-12));
  }
  SUBCASE("argmax filtering matches a brute-force oracle and drops none") {
    Tape t;
    ParamBinder bind(t, f.store);
    const auto spans = enumerate_spans(5, 4);
    const int reps =
        span_representations(t, t.leaf(oracle::random_matrix(5, 3, rng)), f.params, bind, spans);
    const Matrix& post = t.value(span_posteriors(t, reps, f.params, bind));
    const auto predicted = extract_entities(post, spans);
    std::set<std::pair<int, int>> got;
    for (const auto& p : predicted) {
      CHECK(p.type < 3);  // never the none class
      CHECK(p.span.width <= 4);
      got.insert({p.span.start, p.span.width});
      const auto span_row = std::find(spans.begin(), spans.end(), p.span) - spans.begin();
      CHECK(p.score == post(static_cast<int>(span_row), p.type));
    }
    // brute force: argmax per row
    int row = 0;
    std::set<std::pair<int, int>> expect;
    for (const auto& s : spans) {
      int best = 0;
      for (int c = 1; c < post.cols(); ++c)
        if (post(row, c) > post(row, best)) best = c;
      if (best != 3) expect.insert({s.start, s.width});
      ++row;
    }
    CHECK(got == expect);
  }
}

TEST_CASE("relation candidates") {
  CHECK(build_relation_candidates(0).empty());
  CHECK(build_relation_candidates(1).empty());
  CHECK(build_relation_candidates(2).size() == 2);
  CHECK(build_relation_candidates(3).size() == 6);
  for (const auto& c : build_relation_candidates(4)) CHECK(c.head != c.tail);
}

TEST_CASE("relation representations") {
  HeadFixture f(3, 2, 4, 5, 2, 2);
  tagspan::Rng rng(11);
  const Matrix h = oracle::random_matrix(6, 3, rng);

  SUBCASE("adjacent entities get a zero context") {
    Tape t;
    ParamBinder bind(t, f.store);
    const Matrix& reps = t.value(relation_representations(
        t, t.leaf(h), f.params, bind, {{SpanCandidate{0, 2}, SpanCandidate{2, 1}}}));
    REQUIRE(reps.cols() == 2 * (2 * 3 + 2) + 3);
    for (int j = 0; j < 3; ++j) CHECK(reps(0, 16 + j) == 0.0);
  }
  SUBCASE("context is the max over strictly-between rows") {
    Tape t;
    ParamBinder bind(t, f.store);
    const Matrix& reps = t.value(relation_representations(
        t, t.leaf(h), f.params, bind, {{SpanCandidate{0, 1}, SpanCandidate{3, 1}}}));
    for (int j = 0; j < 3; ++j) CHECK(reps(0, 16 + j) == std::max(h(1, j), h(2, j)));
  }
  SUBCASE("context window is symmetric in argument order") {
    Tape t;
    ParamBinder bind(t, f.store);
    const Matrix& fwd = t.value(relation_representations(
        t, t.leaf(h), f.params, bind, {{SpanCandidate{0, 1}, SpanCandidate{4, 2}}}));
    const Matrix& rev = t.value(relation_representations(
        t, t.leaf(h), f.params, bind, {{SpanCandidate{4, 2}, SpanCandidate{0, 1}}}));
    for (int j = 0; j < 3; ++j) CHECK(fwd(0, 16 + j) == rev(0, 16 + j));
  }
}

TEST_CASE("relation activation threshold") {
  HeadFixture f(3, 2, 4, 5, 2, 3);
  tagspan::Rng rng(12);

  SUBCASE("scores at or above alpha activate, multi-label") {
    Matrix scores{{0.41, 0.39, 0.72}, {0.1, 0.2, 0.3}};
    const std::vector<RelationCandidate> pairs{{0, 1}, {1, 0}};
    const auto active = extract_relations(scores, pairs, 0.4);
    REQUIRE(active.size() == 2);
    CHECK(active[0].type == 0);
    CHECK(active[1].type == 2);
    CHECK(active[0].head == 0);
    CHECK(extract_relations(Matrix{{0.39, 0.2}}, {{0, 1}}, 0.4).empty());
  }
  SUBCASE("monotone in alpha") {
    tagspan::Rng r2(13);
    const Matrix scores = [&] {
      Matrix s(6, 3);
      for (size_t i = 0; i < s.size(); ++i) s.data()[i] = r2.next_double();
      return s;
    }();
    std::vector<RelationCandidate> pairs;
    for (int i = 0; i < 6; ++i) pairs.push_back({i, (i + 1) % 6});
    auto as_set = [](const std::vector<RelationPrediction>& v) {
      std::set<std::tuple<int, int, int>> out;
      for (const auto& p : v) out.insert({p.head, p.tail, p.type});
      return out;
    };
    const auto loose = as_set(extract_relations(scores, pairs, 0.2));
    const auto tight = as_set(extract_relations(scores, pairs, 0.6));
    for (const auto& item : tight) CHECK(loose.count(item) == 1);
  }
}

TEST_CASE("negative sampling") {
  AnnotatedDocument doc;
  for (int i = 0; i < 12; ++i) doc.tokens.push_back("t" + std::to_string(i));
  doc.entities = {EntityMention{0, 2, "A"}, EntityMention{3, 4, "B"}, EntityMention{5, 8, "A"}};
  doc.relations = {RelationMention{0, 1, "R"}};

  SUBCASE("quota is honored and gold spans are never sampled") {
    const auto neg = sample_negatives(doc, 4, 10, 10, 77);
    CHECK(neg.spans.size() == 10);
    for (const auto& s : neg.spans) {
      for (const auto& gold : doc.entities)
        CHECK(!(s.start == gold.start && s.end() == gold.end));
    }
    // 3 gold entities, 6 ordered pairs, 1 related -> 5 eligible
    CHECK(neg.entity_pairs.size() == 5);
    for (const auto& [head, tail] : neg.entity_pairs) {
      CHECK(head != tail);
      CHECK(!(head == 0 && tail == 1));
    }
  }
  SUBCASE("small pools are exhausted without error") {
    AnnotatedDocument tiny;
    tiny.tokens = {"a", "b"};
    const auto neg = sample_negatives(tiny, 10, 100, 100, 1);
    CHECK(neg.spans.size() == 3);  // [0,1) [0,2) [1,2)
    CHECK(neg.entity_pairs.empty());
  }
  SUBCASE("seeded sampling reproduces exactly and varies across seeds") {
    const auto a = sample_negatives(doc, 4, 8, 3, 123);
    const auto b = sample_negatives(doc, 4, 8, 3, 123);
    CHECK(a.spans == b.spans);
    CHECK(a.entity_pairs == b.entity_pairs);
    bool any_diff = false;
    for (int seed = 0; seed < 20 && !any_diff; ++seed)
      any_diff = !(sample_negatives(doc, 4, 8, 3, seed).spans == a.spans);
    CHECK(any_diff);
  }
}
