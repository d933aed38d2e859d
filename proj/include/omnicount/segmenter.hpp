#pragma once

#include <optional>
#include <string>
#include <vector>

#include "omnicount/refpoints.hpp"

namespace omnicount {

struct SegmentParams {
  int min_area = 20;     // px^2; smaller masks are not counted
  float flood_tau = 0.3f;  // reference backend depth tolerance
  std::optional<float> dedupe_iou;

  void validate() const;
};

struct InstanceMaskSet {
  std::string class_label;
  std::vector<Mask> masks;
  std::vector<std::size_t> filtered;
};

// Request handed to a backend for one class of one image.
struct SegmentRequest {
  std::string class_label;
  const Mask* class_mask = nullptr;      // refined semantic mask
  const FloatGrid* depth = nullptr;      // set when the backend accepts depth
  const Volume* rgb_patch = nullptr;     // set when the backend accepts rgb
  std::vector<RefPoint> points;          // full-resolution prompts
};

class SegmenterBackend {
 public:
  virtual ~SegmenterBackend() = default;
  virtual bool accepts_rgb() const = 0;
  virtual bool accepts_depth() const = 0;
  // Deterministic for a fixed configuration and input; returns unfiltered masks.
  virtual InstanceMaskSet segment(const SegmentRequest& request) const = 0;
};

// rgb * mask, channel-wise.
Volume extract_rgb_patch(const Volume& rgb, const Mask& mask);

// Depth-gated 4-connected region growing from each prompt in order; a prompt
// on an unclaimed mask pixel starts a new instance.
InstanceMaskSet reference_segment(const Mask& class_mask, const FloatGrid& depth,
                                  const std::vector<RefPoint>& points,
                                  const SegmentParams& params);

double mask_iou(const Mask& a, const Mask& b);

// Populates `filtered` (ascending indices) with masks of area >= min_area,
// optionally after greedy largest-first IoU suppression.
InstanceMaskSet filter_masks(InstanceMaskSet set, const SegmentParams& params);

std::size_t count(const InstanceMaskSet& set);

class ReferenceBackend final : public SegmenterBackend {
 public:
  explicit ReferenceBackend(SegmentParams params) : params_(params) { params_.validate(); }
  bool accepts_rgb() const override { return false; }
  bool accepts_depth() const override { return true; }
  InstanceMaskSet segment(const SegmentRequest& request) const override;

 private:
  SegmentParams params_;
};

}  // namespace omnicount
