#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "omnicount/pipeline.hpp"

namespace omnicount {

struct AnnotatedClass {
  std::string label;
  long gt_count = 0;
  std::optional<std::vector<std::array<float, 2>>> points;  // (y, x)
  std::optional<std::vector<Box>> boxes;
};

struct VqaPair {
  std::string question;
  std::string answer;
};

// One ground-truth line of an annotation JSONL file.
struct AnnotationRecord {
  std::string image_id;
  std::string domain;
  std::vector<AnnotatedClass> objects;
  std::vector<VqaPair> vqa;  // carried through, never scored

  const AnnotatedClass* find(std::string_view label) const;
};

AnnotationRecord parse_annotation(const std::string& line);
std::string to_json_line(const AnnotationRecord& record);

// Parse errors name the 1-based line number. Blank lines are skipped.
std::vector<AnnotationRecord> read_annotations(const std::filesystem::path& path);

}  // namespace omnicount
