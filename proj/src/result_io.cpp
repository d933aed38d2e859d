#include "omnicount/result_io.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

namespace omnicount {

using nlohmann::json;

std::vector<std::uint32_t> encode_runs(const Mask& mask) {
  std::vector<std::uint32_t> runs;
  const auto data = mask.data();
  std::size_t i = 0;
  while (i < data.size()) {
    if (!data[i]) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    while (i < data.size() && data[i]) ++i;
    runs.push_back(static_cast<std::uint32_t>(start));
    runs.push_back(static_cast<std::uint32_t>(i - start));
  }
  return runs;
}

Mask decode_runs(const std::vector<std::uint32_t>& runs, int height, int width) {
  Mask mask(height, width);
  if (runs.size() % 2 != 0) throw Error(ErrorKind::ParseError, "odd run-length list");
  for (std::size_t r = 0; r + 1 < runs.size(); r += 2) {
    const std::size_t start = runs[r];
    const std::size_t len = runs[r + 1];
    if (start + len > mask.size()) throw Error(ErrorKind::DimMismatch, "run exceeds mask");
    for (std::size_t i = start; i < start + len; ++i) mask.data()[i] = 1;
  }
  return mask;
}

std::string to_json_line(const CountResult& result, bool include_timings) {
  json doc;
  doc["image_id"] = result.image_id;
  doc["classes"] = json::array();
  for (const auto& c : result.classes) {
    json entry{{"label", c.label},
               {"count", c.count},
               {"n_reference_points", c.n_reference_points},
               {"n_masks_prefilter", c.n_masks_prefilter}};
    entry["points"] = json::array();
    for (const auto& p : c.points) entry["points"].push_back({p.y, p.x, p.score});
    if (c.mask_set) {
      entry["instances"] = json::array();
      for (std::size_t idx : c.mask_set->filtered) {
        entry["instances"].push_back(encode_runs(c.mask_set->masks[idx]));
      }
    }
    if (c.error) entry["error"] = *c.error;
    doc["classes"].push_back(std::move(entry));
  }
  if (include_timings) doc["timings_ms"] = result.timings_ms;
  return doc.dump();
}

CountResult parse_count_result(const std::string& line, int height, int width) {
  CountResult result;
  try {
    const auto doc = json::parse(line);
    result.image_id = doc.at("image_id").get<std::string>();
    for (const auto& entry : doc.at("classes")) {
      ClassCount c;
      c.label = entry.at("label").get<std::string>();
      c.count = entry.at("count").get<std::size_t>();
      c.n_reference_points = entry.value("n_reference_points", std::size_t{0});
      c.n_masks_prefilter = entry.value("n_masks_prefilter", std::size_t{0});
      if (auto it = entry.find("points"); it != entry.end()) {
        for (const auto& p : *it) {
          c.points.push_back({p.at(0).get<float>(), p.at(1).get<float>(),
                              p.size() > 2 ? p.at(2).get<float>() : 1.0f});
        }
      }
      if (auto it = entry.find("instances"); it != entry.end() && height > 0 && width > 0) {
        InstanceMaskSet set;
        set.class_label = c.label;
        for (const auto& runs : *it) {
          set.filtered.push_back(set.masks.size());
          set.masks.push_back(decode_runs(runs.get<std::vector<std::uint32_t>>(), height, width));
        }
        c.mask_set = std::move(set);
      }
      if (auto it = entry.find("error"); it != entry.end()) c.error = it->get<std::string>();
      result.classes.push_back(std::move(c));
    }
    if (auto it = doc.find("timings_ms"); it != doc.end()) {
      result.timings_ms = it->get<std::map<std::string, double>>();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, e.what());
  }
  return result;
}

std::vector<CountResult> read_count_results(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open " + path.string());
  std::vector<CountResult> out;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_count_result(line));
    } catch (const Error& e) {
      throw Error(e.kind(), path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace omnicount
