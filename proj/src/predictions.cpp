#include "tagspan/predictions.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace tagspan {

using nlohmann::json;

DocPrediction to_doc_prediction(const Model::Prediction& pred, const TypeSchema& schema) {
  DocPrediction out;
  for (const auto& e : pred.entities)
    out.entities.push_back(
        PredictedEntity{schema.entity_types[e.type], e.span.start, e.span.end(), e.score});
  for (const auto& r : pred.relations) {
    const auto& head = pred.entities[r.head].span;
    const auto& tail = pred.entities[r.tail].span;
    out.relations.push_back(PredictedRelation{schema.relation_types[r.type],
                                              {head.start, head.end()},
                                              {tail.start, tail.end()},
                                              r.score});
  }
  return out;
}

DocRecords records_from_prediction(const DocPrediction& pred, int token_count) {
  DocRecords out;
  out.token_count = token_count;
  std::map<std::pair<int, int>, std::string> span_type;
  for (const auto& e : pred.entities) {
    out.entities.push_back(EntityRecord{e.start, e.end, e.type, std::nullopt});
    span_type.emplace(std::make_pair(e.start, e.end), e.type);
  }
  auto type_at = [&](const std::pair<int, int>& span) {
    auto it = span_type.find(span);
    return it == span_type.end() ? std::string() : it->second;
  };
  for (const auto& r : pred.relations)
    out.relations.push_back(
        RelationRecord{r.type, r.head_span, r.tail_span, type_at(r.head_span), type_at(r.tail_span)});
  return out;
}

std::string predictions_to_json_text(const std::vector<DocPrediction>& docs) {
  json arr = json::array();
  for (const auto& doc : docs) {
    json rec;
    rec["entities"] = json::array();
    for (const auto& e : doc.entities)
      rec["entities"].push_back(
          json{{"type", e.type}, {"start", e.start}, {"end", e.end}, {"score", e.score}});
    rec["relations"] = json::array();
    for (const auto& r : doc.relations)
      rec["relations"].push_back(json{{"type", r.type},
                                      {"head_span", {r.head_span.first, r.head_span.second}},
                                      {"tail_span", {r.tail_span.first, r.tail_span.second}},
                                      {"score", r.score}});
    arr.push_back(std::move(rec));
  }
  return arr.dump(2) + "\n";
}

std::vector<DocPrediction> predictions_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("predictions file is not valid JSON: ") + e.what());
  }
  if (!j.is_array()) throw ParseError("predictions file must be a JSON array");
  std::vector<DocPrediction> out;
  for (size_t i = 0; i < j.size(); ++i) {
    DocPrediction doc;
    try {
      for (const auto& e : j[i].at("entities"))
        doc.entities.push_back(PredictedEntity{e.at("type").get<std::string>(), e.at("start").get<int>(),
                                               e.at("end").get<int>(), e.value("score", 0.0)});
      for (const auto& r : j[i].at("relations")) {
        const auto hs = r.at("head_span").get<std::vector<int>>();
        const auto ts = r.at("tail_span").get<std::vector<int>>();
        if (hs.size() != 2 || ts.size() != 2) throw ParseError("span must be [start, end]");
        doc.relations.push_back(PredictedRelation{
            r.at("type").get<std::string>(), {hs[0], hs[1]}, {ts[0], ts[1]}, r.value("score", 0.0)});
      }
    } catch (const json::exception& e) {
      throw ParseError("predictions record " + std::to_string(i) + ": " + e.what(),
                       static_cast<int>(i));
    }
    out.push_back(std::move(doc));
  }
  return out;
}

std::vector<DocPrediction> load_predictions(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open predictions file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return predictions_from_json_text(ss.str());
}

void save_predictions(const std::string& path, const std::vector<DocPrediction>& docs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write predictions file: " + path);
  out << predictions_to_json_text(docs);
}

}  // namespace tagspan
