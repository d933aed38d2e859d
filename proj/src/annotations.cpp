#include "omnicount/annotations.hpp"

#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

namespace omnicount {

using nlohmann::json;

const AnnotatedClass* AnnotationRecord::find(std::string_view label) const {
  auto it = std::find_if(objects.begin(), objects.end(),
                         [&](const AnnotatedClass& c) { return c.label == label; });
  return it == objects.end() ? nullptr : &*it;
}

AnnotationRecord parse_annotation(const std::string& line) {
  AnnotationRecord rec;
  try {
    const auto doc = json::parse(line);
    rec.image_id = doc.at("image_id").get<std::string>();
    rec.domain = doc.value("domain", std::string{});
    for (const auto& obj : doc.at("objects")) {
      AnnotatedClass cls;
      cls.label = obj.at("label").get<std::string>();
      cls.gt_count = obj.at("count").get<long>();
      if (cls.gt_count < 0) throw Error(ErrorKind::SchemaMismatch, "negative count for " + cls.label);
      if (auto it = obj.find("points"); it != obj.end() && !it->is_null()) {
        cls.points.emplace();
        for (const auto& p : *it) cls.points->push_back({p.at(0).get<float>(), p.at(1).get<float>()});
        if (static_cast<long>(cls.points->size()) != cls.gt_count) {
          throw Error(ErrorKind::SchemaMismatch, cls.label + ": count disagrees with points");
        }
      }
      if (auto it = obj.find("boxes"); it != obj.end() && !it->is_null()) {
        cls.boxes.emplace();
        for (const auto& b : *it) {
          cls.boxes->push_back({b.at(0).get<float>(), b.at(1).get<float>(), b.at(2).get<float>(),
                                b.at(3).get<float>()});
        }
        if (static_cast<long>(cls.boxes->size()) != cls.gt_count) {
          throw Error(ErrorKind::SchemaMismatch, cls.label + ": count disagrees with boxes");
        }
      }
      rec.objects.push_back(std::move(cls));
    }
    if (auto it = doc.find("vqa"); it != doc.end() && !it->is_null()) {
      for (const auto& qa : *it) {
        rec.vqa.push_back({qa.at("q").get<std::string>(), qa.at("a").get<std::string>()});
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, e.what());
  }
  return rec;
}

std::string to_json_line(const AnnotationRecord& rec) {
  json doc;
  doc["image_id"] = rec.image_id;
  doc["domain"] = rec.domain;
  doc["objects"] = json::array();
  for (const auto& cls : rec.objects) {
    json obj{{"label", cls.label}, {"count", cls.gt_count}};
    if (cls.points) {
      obj["points"] = json::array();
      for (const auto& p : *cls.points) obj["points"].push_back({p[0], p[1]});
    }
    if (cls.boxes) {
      obj["boxes"] = json::array();
      for (const auto& b : *cls.boxes) obj["boxes"].push_back({b.y0, b.x0, b.y1, b.x1});
    }
    doc["objects"].push_back(std::move(obj));
  }
  if (!rec.vqa.empty()) {
    doc["vqa"] = json::array();
    for (const auto& qa : rec.vqa) doc["vqa"].push_back({{"q", qa.question}, {"a", qa.answer}});
  }
  return doc.dump();
}

std::vector<AnnotationRecord> read_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open " + path.string());
  std::vector<AnnotationRecord> out;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_annotation(line));
    } catch (const Error& e) {
      throw Error(e.kind(), path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace omnicount
