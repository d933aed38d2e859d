#include "omnicount/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace omnicount {
namespace {

class StageTimer {
 public:
  StageTimer(std::map<std::string, double>& sink, std::string name)
      : sink_(sink), name_(std::move(name)), start_(std::chrono::steady_clock::now()) {}
  ~StageTimer() {
    const auto elapsed = std::chrono::steady_clock::now() - start_;
    sink_[name_] += std::chrono::duration<double, std::milli>(elapsed).count();
  }
  StageTimer(const StageTimer&) = delete;
  StageTimer& operator=(const StageTimer&) = delete;

 private:
  std::map<std::string, double>& sink_;
  std::string name_;
  std::chrono::steady_clock::time_point start_;
};

void notify(StageObserver* observer, std::string_view stage, std::string_view label) {
  if (observer) observer->on_stage(stage, label);
}

}  // namespace

const ClassCount* CountResult::find(std::string_view label) const {
  auto it = std::find_if(classes.begin(), classes.end(),
                         [&](const ClassCount& c) { return c.label == label; });
  return it == classes.end() ? nullptr : &*it;
}

std::vector<RefPoint> boxes_to_points(const std::vector<Box>& boxes) {
  std::vector<RefPoint> out;
  out.reserve(boxes.size());
  for (const auto& b : boxes) {
    if (!(b.y0 < b.y1 && b.x0 < b.x1)) {
      throw Error(ErrorKind::DegenerateBox, "box (" + std::to_string(b.y0) + "," +
                                                std::to_string(b.x0) + "," + std::to_string(b.y1) +
                                                "," + std::to_string(b.x1) + ")");
    }
    out.push_back({(b.y0 + b.y1) / 2.0f, (b.x0 + b.x1) / 2.0f, 1.0f});
  }
  return out;
}

std::vector<RefPoint> uniform_grid_points(const Mask& mask, int stride) {
  if (stride < 1) throw Error(ErrorKind::InvalidArgument, "grid stride must be >= 1");
  std::vector<RefPoint> cells;
  const int rows = activation_extent(mask.height(), stride);
  const int cols = activation_extent(mask.width(), stride);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      cells.push_back({static_cast<float>(i), static_cast<float>(j), 1.0f});
    }
  }
  return gate_points(upscale_points(cells, stride, mask.height(), mask.width()), mask);
}

CountingPipeline::CountingPipeline(PipelineConfig config) : config_(std::move(config)) {
  if (!config_.stages.use_semantic) {
    throw Error(ErrorKind::UnsupportedConfig,
                "counting without semantic masks requires a full-image segmenter");
  }
  config_.refine.validate();
  config_.points.validate();
  config_.segment.validate();
}

CountResult CountingPipeline::count(const PriorBundle& bundle, const CountRequest& request,
                                    const SegmenterBackend& backend,
                                    StageObserver* observer) const {
  if (request.labels.empty()) throw Error(ErrorKind::UnknownLabel, "no labels requested");
  std::vector<std::size_t> indices;
  for (const auto& label : request.labels) {
    auto idx = bundle.class_index(label);
    if (!idx) throw Error(ErrorKind::UnknownLabel, "\"" + label + "\" not in bundle " + bundle.image_id);
    indices.push_back(*idx);
  }
  const bool has_manual = !request.manual_points.empty() || !request.manual_boxes.empty();
  if ((request.prompt_mode == PromptMode::Auto) == has_manual) {
    throw Error(ErrorKind::InvalidArgument,
                "manual prompts must be given exactly when the prompt mode is not auto");
  }

  CountResult result;
  result.image_id = request.image_id.empty() ? bundle.image_id : request.image_id;

  // Shared across classes; computed once.
  RefinedPriors refined;
  {
    StageTimer timer(result.timings_ms, "refine");
    notify(observer, "refine", "");
    if (config_.stages.use_geometric) {
      refined = refine_masks(bundle, config_.refine);
    } else {
      refined.refined_masks = bundle.semantic_masks;
      refined.mean_depths.assign(bundle.class_labels.size(), std::nanf(""));
      refined.added_pixel_count.assign(bundle.class_labels.size(), 0);
    }
  }

  for (std::size_t n = 0; n < indices.size(); ++n) {
    const std::size_t m = indices[n];
    const std::string& label = bundle.class_labels[m];
    const Mask& class_mask = refined.refined_masks[m];
    ClassCount entry;
    entry.label = label;
    try {
      {
        StageTimer timer(result.timings_ms, "points");
        notify(observer, "points", label);
        switch (request.prompt_mode) {
          case PromptMode::Auto:
            if (!config_.stages.use_refpoints) {
              entry.points = uniform_grid_points(class_mask, bundle.downsample_factor);
            } else if (!bundle.activations[m]) {
              throw Error(ErrorKind::MissingField, "no activation for class \"" + label + "\"");
            } else {
              entry.points = select_class_points(*bundle.activations[m], class_mask,
                                                 bundle.downsample_factor, config_.points);
            }
            break;
          case PromptMode::Points:
            if (auto it = request.manual_points.find(label); it != request.manual_points.end()) {
              entry.points = it->second;
            }
            break;
          case PromptMode::Boxes:
            if (auto it = request.manual_boxes.find(label); it != request.manual_boxes.end()) {
              entry.points = boxes_to_points(it->second);
            }
            break;
        }
      }
      entry.n_reference_points = entry.points.size();

      std::optional<Volume> patch;
      SegmentRequest seg;
      seg.class_label = label;
      seg.class_mask = &class_mask;
      seg.points = entry.points;
      if (backend.accepts_depth()) seg.depth = &bundle.depth;
      if (backend.accepts_rgb()) {
        if (!bundle.rgb) {
          throw Error(ErrorKind::MissingField, "backend needs rgb but the bundle has none");
        }
        StageTimer timer(result.timings_ms, "patch");
        patch = extract_rgb_patch(*bundle.rgb, class_mask);
        seg.rgb_patch = &*patch;
      }

      InstanceMaskSet set;
      {
        StageTimer timer(result.timings_ms, "segment");
        notify(observer, "segment", label);
        set = backend.segment(seg);
        set.class_label = label;
      }
      entry.n_masks_prefilter = set.masks.size();
      {
        StageTimer timer(result.timings_ms, "filter");
        set = filter_masks(std::move(set), config_.segment);
      }
      entry.count = omnicount::count(set);
      if (config_.keep_masks) entry.mask_set = std::move(set);
    } catch (const Error& e) {
      entry.count = 0;
      entry.error = e.what();
    }
    result.classes.push_back(std::move(entry));
  }
  return result;
}

CountingPipeline toggle_stages(PipelineConfig config, StageToggles toggles) {
  config.stages = toggles;
  return CountingPipeline(std::move(config));
}

CountResult count_image(const PriorBundle& bundle, const CountRequest& request,
                        const PipelineConfig& config, const SegmenterBackend& backend,
                        StageObserver* observer) {
  return CountingPipeline(config).count(bundle, request, backend, observer);
}

}  // namespace omnicount
