#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tagspan/data.hpp"

namespace tagspan {

enum class MatchCriterion { ner_boundary_type, ner_head_type, re_boundary, re_plus };
enum class Aggregation { micro, macro };

MatchCriterion criterion_from_string(const std::string& name);
std::string to_string(MatchCriterion c);
std::string to_string(Aggregation a);

// Uniform records for matching; both gold annotations and model/file
// predictions reduce to these.
struct EntityRecord {
  int start = 0;
  int end = 0;
  std::string type;
  std::optional<std::pair<int, int>> head_span;
};

struct RelationRecord {
  std::string type;
  std::pair<int, int> head_span;
  std::pair<int, int> tail_span;
  // Entity types of the two arguments; empty when unknown. Only RE+ looks at
  // them.
  std::string head_type;
  std::string tail_type;
};

struct Counts {
  long tp = 0;
  long fp = 0;
  long fn = 0;
};
using TypeCounts = std::map<std::string, Counts>;

// Exact set matching per type. Duplicates are collapsed first, so each gold
// item matches at most once. Under ner_head_type the gold side must carry
// head spans (error otherwise); a prediction without one is matched by its
// own boundaries.
TypeCounts match_entities(const std::vector<EntityRecord>& gold, const std::vector<EntityRecord>& predicted,
                          MatchCriterion criterion);

// re_boundary ignores argument entity types; re_plus requires them. Direction
// always matters.
TypeCounts match_relations(const std::vector<RelationRecord>& gold,
                           const std::vector<RelationRecord>& predicted, MatchCriterion criterion);

void merge_counts(TypeCounts& into, const TypeCounts& from);

struct Prf {
  double p = 0.0;
  double r = 0.0;
  double f1 = 0.0;
  Counts counts;
  bool zero_denominator = false;
};

struct MetricsReport {
  std::string criterion;
  std::string aggregation;
  std::map<std::string, Prf> per_type;
  Prf overall;
  bool zero_denominator = false;  // any zero-denominator convention applied
  // Macro averaging skips types with no gold instances; they are listed here.
  std::vector<std::string> skipped_types;
};

// P = TP/(TP+FP), R = TP/(TP+FN), F1 = 2PR/(P+R); zero denominators score 0.
// Micro pools counts across types; macro averages per-type scores over types
// with at least one gold instance.
MetricsReport prf1(const TypeCounts& counts, Aggregation aggregation,
                   MatchCriterion criterion = MatchCriterion::ner_boundary_type);

// Per-document gold and predictions, aligned by index.
struct DocRecords {
  std::vector<EntityRecord> entities;
  std::vector<RelationRecord> relations;
  int token_count = 0;
};

DocRecords records_from_document(const AnnotatedDocument& doc);

MetricsReport score_corpus(const std::vector<DocRecords>& gold, const std::vector<DocRecords>& predicted,
                           MatchCriterion criterion, Aggregation aggregation);

// Entity-length buckets filter mentions by width; text-length buckets group
// whole documents by token count. Every bucket label appears in the result.
std::map<std::string, MetricsReport> bucketed_report(const std::vector<DocRecords>& gold,
                                                     const std::vector<DocRecords>& predicted,
                                                     BucketKind kind, MatchCriterion criterion,
                                                     Aggregation aggregation);

std::string report_to_json_text(const MetricsReport& report);
std::string report_to_table(const MetricsReport& report);

}  // namespace tagspan
