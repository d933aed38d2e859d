#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "omnicount/pipeline.hpp"

namespace omnicount {

// CountResult <-> one JSONL line:
// {"image_id": .., "classes": [{"label", "count", "n_reference_points",
//   "n_masks_prefilter", "points": [[y, x, score]..], "instances": [[start,
//   len, ..]..]?, "error"?}], "timings_ms"?: {..}}
// Instance masks are run-length encoded over row-major pixel indices and are
// only written for the filtered subset when the result kept its masks.
std::string to_json_line(const CountResult& result, bool include_timings = false);
CountResult parse_count_result(const std::string& line, int height = 0, int width = 0);

std::vector<CountResult> read_count_results(const std::filesystem::path& path);

std::vector<std::uint32_t> encode_runs(const Mask& mask);
Mask decode_runs(const std::vector<std::uint32_t>& runs, int height, int width);

}  // namespace omnicount
