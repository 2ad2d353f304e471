#include "tagspan/data.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace tagspan {

using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void check_reserved(const std::string& name) {
  if (name == "NoneEntity" || name == "NoneType")
    throw ParseError("reserved type name in schema: " + name);
}

}  // namespace

bool TypeSchema::has_entity_type(const std::string& t) const {
  return std::find(entity_types.begin(), entity_types.end(), t) != entity_types.end();
}

bool TypeSchema::has_relation_type(const std::string& t) const {
  return std::find(relation_types.begin(), relation_types.end(), t) != relation_types.end();
}

int TypeSchema::entity_type_index(const std::string& t) const {
  auto it = std::find(entity_types.begin(), entity_types.end(), t);
  return it == entity_types.end() ? -1 : static_cast<int>(it - entity_types.begin());
}

int TypeSchema::relation_type_index(const std::string& t) const {
  auto it = std::find(relation_types.begin(), relation_types.end(), t);
  return it == relation_types.end() ? -1 : static_cast<int>(it - relation_types.begin());
}

TypeSchema schema_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("schema is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("entities") || !j.contains("relations"))
    throw ParseError("schema must be an object with \"entities\" and \"relations\" arrays");
  TypeSchema schema;
  for (const auto& t : j.at("entities")) {
    std::string name = t.get<std::string>();
    check_reserved(name);
    if (schema.has_entity_type(name)) throw ParseError("duplicate entity type: " + name);
    schema.entity_types.push_back(name);
  }
  for (const auto& t : j.at("relations")) {
    std::string name = t.get<std::string>();
    check_reserved(name);
    if (schema.has_relation_type(name)) throw ParseError("duplicate relation type: " + name);
    schema.relation_types.push_back(name);
  }
  return schema;
}

TypeSchema load_schema(const std::string& path) { return schema_from_json_text(read_file(path)); }

std::string schema_to_json_text(const TypeSchema& schema) {
  json j;
  j["entities"] = schema.entity_types;
  j["relations"] = schema.relation_types;
  return j.dump(2) + "\n";
}

std::vector<std::string> validate_document(const AnnotatedDocument& doc, const TypeSchema& schema) {
  std::vector<std::string> violations;
  const int n = doc.size();
  for (int i = 0; i < n; ++i)
    if (doc.tokens[i].empty()) violations.push_back("token " + std::to_string(i) + " is empty");

  std::set<std::tuple<int, int, std::string>> seen;
  for (size_t e = 0; e < doc.entities.size(); ++e) {
    const auto& m = doc.entities[e];
    const std::string where = "entity " + std::to_string(e);
    if (m.start >= m.end) {
      violations.push_back(where + ": empty span");
    } else if (m.start < 0 || m.end > n) {
      violations.push_back(where + ": out of range");
    }
    if (!schema.has_entity_type(m.type)) violations.push_back(where + ": unknown type " + m.type);
    if (!seen.insert({m.start, m.end, m.type}).second)
      violations.push_back(where + ": duplicate mention");
    const bool has_hs = m.head_start.has_value(), has_he = m.head_end.has_value();
    if (has_hs != has_he) {
      violations.push_back(where + ": head span must set both bounds");
    } else if (has_hs) {
      if (*m.head_start >= *m.head_end || *m.head_start < m.start || *m.head_end > m.end)
        violations.push_back(where + ": head span outside entity span");
    }
  }
  const int ecount = static_cast<int>(doc.entities.size());
  for (size_t r = 0; r < doc.relations.size(); ++r) {
    const auto& rel = doc.relations[r];
    const std::string where = "relation " + std::to_string(r);
    if (rel.head < 0 || rel.head >= ecount || rel.tail < 0 || rel.tail >= ecount)
      violations.push_back(where + ": entity index out of range");
    else if (rel.head == rel.tail)
      violations.push_back(where + ": self-relation");
    if (!schema.has_relation_type(rel.type)) violations.push_back(where + ": unknown type " + rel.type);
  }
  return violations;
}

namespace {

AnnotatedDocument document_from_json(const json& rec, int index) {
  if (!rec.is_object()) throw ParseError("record is not an object", index);
  AnnotatedDocument doc;
  try {
    doc.tokens = rec.at("tokens").get<std::vector<std::string>>();
    for (const auto& e : rec.at("entities")) {
      EntityMention m;
      m.type = e.at("type").get<std::string>();
      m.start = e.at("start").get<int>();
      m.end = e.at("end").get<int>();
      if (e.contains("head_start") || e.contains("head_end")) {
        m.head_start = e.at("head_start").get<int>();
        m.head_end = e.at("head_end").get<int>();
      }
      doc.entities.push_back(std::move(m));
    }
    for (const auto& r : rec.at("relations")) {
      RelationMention rel;
      rel.type = r.at("type").get<std::string>();
      rel.head = r.at("head").get<int>();
      rel.tail = r.at("tail").get<int>();
      doc.relations.push_back(std::move(rel));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed record: ") + e.what(), index);
  }
  return doc;
}

json document_to_json(const AnnotatedDocument& doc) {
  json rec;
  rec["tokens"] = doc.tokens;
  rec["entities"] = json::array();
  for (const auto& m : doc.entities) {
    json e{{"type", m.type}, {"start", m.start}, {"end", m.end}};
    if (m.head_start) {
      e["head_start"] = *m.head_start;
      e["head_end"] = *m.head_end;
    }
    rec["entities"].push_back(std::move(e));
  }
  rec["relations"] = json::array();
  for (const auto& r : doc.relations)
    rec["relations"].push_back(json{{"type", r.type}, {"head", r.head}, {"tail", r.tail}});
  return rec;
}

}  // namespace

Dataset dataset_from_json_text(const std::string& text, const TypeSchema& schema, int max_tokens) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("dataset is not valid JSON: ") + e.what());
  }
  if (!j.is_array()) throw ParseError("dataset must be a JSON array of records");
  Dataset ds;
  ds.schema = schema;
  for (size_t i = 0; i < j.size(); ++i) {
    const int index = static_cast<int>(i);
    AnnotatedDocument doc = document_from_json(j[i], index);
    if (doc.size() > max_tokens)
      throw ParseError("document " + std::to_string(index) + " has " + std::to_string(doc.size()) +
                           " tokens, exceeding the maximum of " + std::to_string(max_tokens) +
                           " (long documents are rejected, not truncated)",
                       index);
    auto violations = validate_document(doc, schema);
    if (!violations.empty()) {
      std::string msg = "document " + std::to_string(index) + " failed validation:";
      for (const auto& v : violations) msg += "\n  - " + v;
      throw ParseError(msg, index);
    }
    ds.documents.push_back(std::move(doc));
  }
  return ds;
}

Dataset parse_dataset(const std::string& path, const TypeSchema& schema, int max_tokens) {
  return dataset_from_json_text(read_file(path), schema, max_tokens);
}

std::string dataset_to_json_text(const Dataset& dataset) {
  json arr = json::array();
  for (const auto& doc : dataset.documents) arr.push_back(document_to_json(doc));
  return arr.dump(2) + "\n";
}

std::string assign_bucket(int length, BucketKind kind) {
  if (kind == BucketKind::entity_length) {
    if (length < 1) throw std::invalid_argument("entity length must be >= 1");
    if (length > 10) throw std::invalid_argument("entity length > 10 exceeds the analysis range");
    const int lo = ((length - 1) / 2) * 2 + 1;
    return "[" + std::to_string(lo) + "-" + std::to_string(lo + 1) + "]";
  }
  if (length < 0) throw std::invalid_argument("text length must be >= 0");
  if (length <= 19) return "[0-19]";
  if (length <= 34) return "[20-34]";
  if (length <= 49) return "[35-49]";
  return "[>=50]";
}

std::vector<std::string> bucket_labels(BucketKind kind) {
  if (kind == BucketKind::entity_length) return {"[1-2]", "[3-4]", "[5-6]", "[7-8]", "[9-10]"};
  return {"[0-19]", "[20-34]", "[35-49]", "[>=50]"};
}

}  // namespace tagspan
