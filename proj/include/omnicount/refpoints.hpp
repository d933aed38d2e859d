#pragma once

#include <string>
#include <vector>

#include "omnicount/refine.hpp"

namespace omnicount {

struct RefPoint {
  float y = 0.0f;
  float x = 0.0f;
  float score = 0.0f;

  friend bool operator==(const RefPoint&, const RefPoint&) = default;
};

struct PointParams {
  float score_threshold = 0.5f;  // on the per-class min-max normalized heatmap
  float sigma = 0.4f;            // Gaussian modulation std, heatmap pixels
  int omega = 4;                 // kernel side = 2*floor(omega/2)+1
  float max_offset = 0.5f;

  int kernel_side() const { return 2 * (omega / 2) + 1; }
  void validate() const;
};

// Strict 8-neighbour maxima of the heatmap whose min-max normalized value is
// at least score_threshold. Integer heatmap coordinates, row-major order;
// score is the raw heatmap value.
std::vector<RefPoint> find_local_maxima(const FloatGrid& heatmap, float score_threshold);

// Second-order Taylor step on the log of the Gaussian-modulated heatmap at
// each integer peak. Offsets are clamped to +-max_offset; peaks on the outer
// ring or with a non-negative-definite Hessian are returned unchanged.
std::vector<RefPoint> gaussian_refine(const FloatGrid& heatmap, const std::vector<RefPoint>& peaks,
                                      const PointParams& params);

// Heatmap-space -> image-space via cell centres, clamped into the image.
std::vector<RefPoint> upscale_points(const std::vector<RefPoint>& points, int downsample_factor,
                                     int height, int width);

// Keeps points whose nearest pixel is on in the mask.
std::vector<RefPoint> gate_points(const std::vector<RefPoint>& points, const Mask& mask);

using ClassPoints = std::vector<std::vector<RefPoint>>;

// Full chain per class: maxima -> refinement -> upscale -> gate by the
// refined mask. Result is indexed like bundle.class_labels.
ClassPoints select_reference_points(const PriorBundle& bundle, const RefinedPriors& refined,
                                    const PointParams& params);
std::vector<RefPoint> select_class_points(const FloatGrid& activation, const Mask& refined_mask,
                                          int downsample_factor, const PointParams& params);

}  // namespace omnicount
