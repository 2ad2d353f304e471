#include "tagspan/eval.hpp"

#include <algorithm>
#include <functional>
#include <iomanip>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include <json.hpp>

namespace tagspan {

MatchCriterion criterion_from_string(const std::string& name) {
  if (name == "ner") return MatchCriterion::ner_boundary_type;
  if (name == "ner_head") return MatchCriterion::ner_head_type;
  if (name == "re") return MatchCriterion::re_boundary;
  if (name == "re_plus") return MatchCriterion::re_plus;
  throw std::invalid_argument("unknown criterion: " + name + " (expected ner, ner_head, re, re_plus)");
}

std::string to_string(MatchCriterion c) {
  switch (c) {
    case MatchCriterion::ner_boundary_type: return "ner";
    case MatchCriterion::ner_head_type: return "ner_head";
    case MatchCriterion::re_boundary: return "re";
    case MatchCriterion::re_plus: return "re_plus";
  }
  return "ner";
}

std::string to_string(Aggregation a) { return a == Aggregation::micro ? "micro" : "macro"; }

namespace {

using EntityKey = std::tuple<int, int, std::string>;

EntityKey entity_key(const EntityRecord& e, MatchCriterion criterion, bool is_gold) {
  if (criterion == MatchCriterion::ner_head_type) {
    if (e.head_span) return {e.head_span->first, e.head_span->second, e.type};
    if (is_gold)
      throw std::invalid_argument("ner_head criterion requires head spans on gold entities");
  }
  return {e.start, e.end, e.type};
}

// (type, head span, tail span, argument types or blanks)
using RelationKey = std::tuple<std::string, int, int, int, int, std::string, std::string>;

RelationKey relation_key(const RelationRecord& r, MatchCriterion criterion) {
  const bool typed = criterion == MatchCriterion::re_plus;
  return {r.type,
          r.head_span.first,
          r.head_span.second,
          r.tail_span.first,
          r.tail_span.second,
          typed ? r.head_type : std::string(),
          typed ? r.tail_type : std::string()};
}

template <typename Key>
TypeCounts count_matches(const std::set<Key>& gold, const std::set<Key>& predicted,
                         const std::function<std::string(const Key&)>& type_of) {
  TypeCounts counts;
  for (const auto& k : gold) {
    auto& c = counts[type_of(k)];
    if (predicted.count(k))
      ++c.tp;
    else
      ++c.fn;
  }
  for (const auto& k : predicted)
    if (!gold.count(k)) ++counts[type_of(k)].fp;
  return counts;
}

}  // namespace

TypeCounts match_entities(const std::vector<EntityRecord>& gold, const std::vector<EntityRecord>& predicted,
                          MatchCriterion criterion) {
  if (criterion != MatchCriterion::ner_boundary_type && criterion != MatchCriterion::ner_head_type)
    throw std::invalid_argument("match_entities expects an NER criterion");
  std::set<EntityKey> g, p;
  for (const auto& e : gold) g.insert(entity_key(e, criterion, true));
  for (const auto& e : predicted) p.insert(entity_key(e, criterion, false));
  return count_matches<EntityKey>(g, p, [](const EntityKey& k) { return std::get<2>(k); });
}

TypeCounts match_relations(const std::vector<RelationRecord>& gold,
                           const std::vector<RelationRecord>& predicted, MatchCriterion criterion) {
  if (criterion != MatchCriterion::re_boundary && criterion != MatchCriterion::re_plus)
    throw std::invalid_argument("match_relations expects a RE criterion");
  std::set<RelationKey> g, p;
  for (const auto& r : gold) g.insert(relation_key(r, criterion));
  for (const auto& r : predicted) p.insert(relation_key(r, criterion));
  return count_matches<RelationKey>(g, p, [](const RelationKey& k) { return std::get<0>(k); });
}

void merge_counts(TypeCounts& into, const TypeCounts& from) {
  for (const auto& [type, c] : from) {
    auto& acc = into[type];
    acc.tp += c.tp;
    acc.fp += c.fp;
    acc.fn += c.fn;
  }
}

namespace {

Prf prf_from_counts(const Counts& c, bool* flagged) {
  Prf out;
  out.counts = c;
  const long pd = c.tp + c.fp;
  const long rd = c.tp + c.fn;
  if (pd == 0 || rd == 0) out.zero_denominator = true;
  out.p = pd > 0 ? static_cast<double>(c.tp) / static_cast<double>(pd) : 0.0;
  out.r = rd > 0 ? static_cast<double>(c.tp) / static_cast<double>(rd) : 0.0;
  if (out.p + out.r > 0.0)
    out.f1 = 2.0 * out.p * out.r / (out.p + out.r);
  else
    out.zero_denominator = true;
  if (flagged && out.zero_denominator) *flagged = true;
  return out;
}

}  // namespace

MetricsReport prf1(const TypeCounts& counts, Aggregation aggregation, MatchCriterion criterion) {
  MetricsReport report;
  report.criterion = to_string(criterion);
  report.aggregation = to_string(aggregation);
  for (const auto& [type, c] : counts)
    report.per_type[type] = prf_from_counts(c, &report.zero_denominator);

  if (aggregation == Aggregation::micro) {
    Counts pooled;
    for (const auto& [type, c] : counts) {
      pooled.tp += c.tp;
      pooled.fp += c.fp;
      pooled.fn += c.fn;
    }
    report.overall = prf_from_counts(pooled, &report.zero_denominator);
  } else {
    double p = 0.0, r = 0.0, f1 = 0.0;
    long with_gold = 0;
    Counts pooled;
    for (const auto& [type, c] : counts) {
      pooled.tp += c.tp;
      pooled.fp += c.fp;
      pooled.fn += c.fn;
      if (c.tp + c.fn == 0) {
        report.skipped_types.push_back(type);
        continue;
      }
      const Prf& tp = report.per_type.at(type);
      p += tp.p;
      r += tp.r;
      f1 += tp.f1;
      ++with_gold;
    }
    report.overall.counts = pooled;
    if (with_gold > 0) {
      report.overall.p = p / static_cast<double>(with_gold);
      report.overall.r = r / static_cast<double>(with_gold);
      report.overall.f1 = f1 / static_cast<double>(with_gold);
    } else {
      report.overall.zero_denominator = true;
      report.zero_denominator = true;
    }
  }
  return report;
}

DocRecords records_from_document(const AnnotatedDocument& doc) {
  DocRecords out;
  out.token_count = doc.size();
  for (const auto& m : doc.entities) {
    EntityRecord e{m.start, m.end, m.type, std::nullopt};
    if (m.head_start) e.head_span = std::make_pair(*m.head_start, *m.head_end);
    out.entities.push_back(std::move(e));
  }
  for (const auto& r : doc.relations) {
    const auto& h = doc.entities[r.head];
    const auto& t = doc.entities[r.tail];
    out.relations.push_back(RelationRecord{r.type,
                                           {h.start, h.end},
                                           {t.start, t.end},
                                           h.type,
                                           t.type});
  }
  return out;
}

MetricsReport score_corpus(const std::vector<DocRecords>& gold, const std::vector<DocRecords>& predicted,
                           MatchCriterion criterion, Aggregation aggregation) {
  if (gold.size() != predicted.size())
    throw std::invalid_argument("score_corpus: gold and predictions are not aligned");
  TypeCounts counts;
  const bool ner = criterion == MatchCriterion::ner_boundary_type || criterion == MatchCriterion::ner_head_type;
  for (size_t i = 0; i < gold.size(); ++i) {
    if (ner)
      merge_counts(counts, match_entities(gold[i].entities, predicted[i].entities, criterion));
    else
      merge_counts(counts, match_relations(gold[i].relations, predicted[i].relations, criterion));
  }
  return prf1(counts, aggregation, criterion);
}

std::map<std::string, MetricsReport> bucketed_report(const std::vector<DocRecords>& gold,
                                                     const std::vector<DocRecords>& predicted,
                                                     BucketKind kind, MatchCriterion criterion,
                                                     Aggregation aggregation) {
  if (gold.size() != predicted.size())
    throw std::invalid_argument("bucketed_report: gold and predictions are not aligned");
  const bool ner = criterion == MatchCriterion::ner_boundary_type || criterion == MatchCriterion::ner_head_type;
  if (kind == BucketKind::entity_length && !ner)
    throw std::invalid_argument("entity-length buckets apply to NER criteria only");

  std::map<std::string, TypeCounts> buckets;
  for (const auto& label : bucket_labels(kind)) buckets[label];  // every bucket present

  if (kind == BucketKind::entity_length) {
    for (size_t i = 0; i < gold.size(); ++i) {
      for (const auto& label : bucket_labels(kind)) {
        auto filter = [&](const std::vector<EntityRecord>& in) {
          std::vector<EntityRecord> out;
          for (const auto& e : in)
            if (e.end - e.start <= 10 && assign_bucket(e.end - e.start, BucketKind::entity_length) == label)
              out.push_back(e);
          return out;
        };
        merge_counts(buckets[label],
                     match_entities(filter(gold[i].entities), filter(predicted[i].entities), criterion));
      }
    }
  } else {
    for (size_t i = 0; i < gold.size(); ++i) {
      const std::string label = assign_bucket(gold[i].token_count, BucketKind::text_length);
      if (ner)
        merge_counts(buckets[label], match_entities(gold[i].entities, predicted[i].entities, criterion));
      else
        merge_counts(buckets[label], match_relations(gold[i].relations, predicted[i].relations, criterion));
    }
  }

  std::map<std::string, MetricsReport> out;
  for (const auto& [label, counts] : buckets) out[label] = prf1(counts, aggregation, criterion);
  return out;
}

namespace {

nlohmann::json prf_to_json(const Prf& x) {
  return nlohmann::json{{"p", x.p},   {"r", x.r},   {"f1", x.f1},
                        {"tp", x.counts.tp}, {"fp", x.counts.fp}, {"fn", x.counts.fn}};
}

}  // namespace

std::string report_to_json_text(const MetricsReport& report) {
  nlohmann::json j;
  j["criterion"] = report.criterion;
  j["aggregation"] = report.aggregation;
  j["per_type"] = nlohmann::json::object();
  for (const auto& [type, prf] : report.per_type) j["per_type"][type] = prf_to_json(prf);
  j["overall"] = prf_to_json(report.overall);
  j["zero_denominator"] = report.zero_denominator;
  if (!report.skipped_types.empty()) j["macro_skipped_types"] = report.skipped_types;
  return j.dump(2) + "\n";
}

std::string report_to_table(const MetricsReport& report) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  out << report.criterion << " (" << report.aggregation << ")\n";
  out << std::left << std::setw(20) << "type" << std::right << std::setw(9) << "P" << std::setw(9)
      << "R" << std::setw(9) << "F1" << std::setw(7) << "TP" << std::setw(7) << "FP" << std::setw(7)
      << "FN" << '\n';
  auto line = [&](const std::string& name, const Prf& x) {
    out << std::left << std::setw(20) << name << std::right << std::setw(9) << x.p << std::setw(9)
        << x.r << std::setw(9) << x.f1 << std::setw(7) << x.counts.tp << std::setw(7) << x.counts.fp
        << std::setw(7) << x.counts.fn << '\n';
  };
  for (const auto& [type, prf] : report.per_type) line(type, prf);
  line("<overall>", report.overall);
  return out.str();
}

}  // namespace tagspan
