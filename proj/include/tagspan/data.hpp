#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tagspan {

// Token span, 0-based, end-exclusive. Width = end - start.
struct EntityMention {
  EntityMention() = default;
  EntityMention(int start, int end, std::string type)
      : start(start), end(end), type(std::move(type)) {}

  int start = 0;
  int end = 0;
  std::string type;
  // Head-span annotations, when the corpus provides them (used by the
  // head-boundary NER criterion). We never derive heads ourselves.
  std::optional<int> head_start;
  std::optional<int> head_end;

  int width() const { return end - start; }
  bool overlaps(const EntityMention& o) const { return start < o.end && o.start < end; }
  friend bool operator==(const EntityMention& a, const EntityMention& b) {
    return a.start == b.start && a.end == b.end && a.type == b.type &&
           a.head_start == b.head_start && a.head_end == b.head_end;
  }
};

struct RelationMention {
  int head = 0;  // index into the document's entity list
  int tail = 0;
  std::string type;
  friend bool operator==(const RelationMention& a, const RelationMention& b) {
    return a.head == b.head && a.tail == b.tail && a.type == b.type;
  }
};

struct AnnotatedDocument {
  std::vector<std::string> tokens;
  std::vector<EntityMention> entities;
  std::vector<RelationMention> relations;

  int size() const { return static_cast<int>(tokens.size()); }
  friend bool operator==(const AnnotatedDocument& a, const AnnotatedDocument& b) {
    return a.tokens == b.tokens && a.entities == b.entities && a.relations == b.relations;
  }
};

struct TypeSchema {
  std::vector<std::string> entity_types;
  std::vector<std::string> relation_types;

  bool has_entity_type(const std::string& t) const;
  bool has_relation_type(const std::string& t) const;
  int entity_type_index(const std::string& t) const;    // -1 if absent
  int relation_type_index(const std::string& t) const;  // -1 if absent
};

struct Dataset {
  std::vector<AnnotatedDocument> documents;
  TypeSchema schema;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int document_index = -1)
      : std::runtime_error(what), document_index(document_index) {}
  int document_index;
};

// "NoneEntity" / "NoneType" are implicit classifier outcomes, never schema
// members; the schema loader and validators reject them.
TypeSchema load_schema(const std::string& path);
TypeSchema schema_from_json_text(const std::string& text);
std::string schema_to_json_text(const TypeSchema& schema);

// Empty result means the document is valid. Each violation is one message.
std::vector<std::string> validate_document(const AnnotatedDocument& doc, const TypeSchema& schema);

Dataset parse_dataset(const std::string& path, const TypeSchema& schema, int max_tokens = 512);
Dataset dataset_from_json_text(const std::string& text, const TypeSchema& schema, int max_tokens = 512);
std::string dataset_to_json_text(const Dataset& dataset);

enum class BucketKind { entity_length, text_length };

// Analysis buckets: entity lengths [1-2]..[9-10], text lengths
// [0-19], [20-34], [35-49], [>=50]. Entity lengths above 10 are out of the
// analysis range and raise.
std::string assign_bucket(int length, BucketKind kind);
std::vector<std::string> bucket_labels(BucketKind kind);

}  // namespace tagspan
