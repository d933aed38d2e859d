#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "omnicount/segmenter.hpp"

namespace omnicount {

enum class PromptMode { Auto, Points, Boxes };

struct Box {
  float y0 = 0, x0 = 0, y1 = 0, x1 = 0;
};

struct CountRequest {
  std::string image_id;
  std::vector<std::string> labels;
  PromptMode prompt_mode = PromptMode::Auto;
  std::map<std::string, std::vector<RefPoint>> manual_points;
  std::map<std::string, std::vector<Box>> manual_boxes;
};

struct ClassCount {
  std::string label;
  std::size_t count = 0;
  std::size_t n_reference_points = 0;
  std::size_t n_masks_prefilter = 0;
  std::vector<RefPoint> points;
  std::optional<InstanceMaskSet> mask_set;  // filled when keep_masks is set
  std::optional<std::string> error;
};

struct CountResult {
  std::string image_id;
  std::vector<ClassCount> classes;
  std::map<std::string, double> timings_ms;

  const ClassCount* find(std::string_view label) const;
};

// Ablation switches. Semantic masks cannot be disabled here.
struct StageToggles {
  bool use_semantic = true;
  bool use_geometric = true;
  bool use_refpoints = true;
};

struct PipelineConfig {
  RefineParams refine;
  PointParams points;
  SegmentParams segment;
  StageToggles stages;
  bool keep_masks = false;
};

// Test hook: notified once per stage invocation.
class StageObserver {
 public:
  virtual ~StageObserver() = default;
  virtual void on_stage(std::string_view stage, std::string_view label) = 0;
};

std::vector<RefPoint> boxes_to_points(const std::vector<Box>& boxes);

// Cell-centre grid at the given stride, kept where the mask is on.
std::vector<RefPoint> uniform_grid_points(const Mask& mask, int stride);

class CountingPipeline {
 public:
  explicit CountingPipeline(PipelineConfig config);

  const PipelineConfig& config() const { return config_; }

  // Refinement runs once per image; each requested class is then prompted,
  // segmented, filtered and counted independently. A failing class is
  // reported in its entry instead of aborting the image.
  CountResult count(const PriorBundle& bundle, const CountRequest& request,
                    const SegmenterBackend& backend, StageObserver* observer = nullptr) const;

 private:
  PipelineConfig config_;
};

// Returns a pipeline with the requested stage substitutions. Throws
// UnsupportedConfig when the semantic prior is disabled.
CountingPipeline toggle_stages(PipelineConfig config, StageToggles toggles);

CountResult count_image(const PriorBundle& bundle, const CountRequest& request,
                        const PipelineConfig& config, const SegmenterBackend& backend,
                        StageObserver* observer = nullptr);

}  // namespace omnicount
