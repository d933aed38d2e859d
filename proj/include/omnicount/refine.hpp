#pragma once

#include <cstddef>
#include <vector>

#include "omnicount/prior_bundle.hpp"

namespace omnicount {

struct RefineParams {
  float tau = 0.3f;        // depth tolerance (normalized depth units)
  int window_radius = 10;  // Chebyshev radius of the neighbourhood search
  int max_passes = 1;

  void validate() const;
};

struct RefinedPriors {
  std::vector<Mask> refined_masks;
  // Pass-start mean depth of the last pass per class; NaN for empty masks.
  std::vector<float> mean_depths;
  std::vector<std::size_t> added_pixel_count;
};

// Arithmetic mean of depth over mask-on pixels. Throws EmptyMask when the mask
// has no pixels and DimMismatch when dims differ.
float mean_depth(const Mask& mask, const FloatGrid& depth);

// Geometry-aware recovery: grows each class mask into nearby unassigned
// pixels that no other class owns and whose depth lies within tau of the
// class's mean depth. Only adds pixels.
RefinedPriors refine_masks(const std::vector<Mask>& masks, const FloatGrid& depth,
                           const RefineParams& params);
RefinedPriors refine_masks(const PriorBundle& bundle, const RefineParams& params);

}  // namespace omnicount
