#include "omnicount/refine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace omnicount {
namespace {

// Square (Chebyshev) dilation via two separable running-max sweeps using
// prefix counts; O(H*W) regardless of radius.
Mask dilate_square(const Mask& mask, int radius) {
  const int h = mask.height();
  const int w = mask.width();
  Mask horizontal(h, w);
  std::vector<int> prefix(static_cast<std::size_t>(std::max(h, w)) + 1);
  for (int y = 0; y < h; ++y) {
    prefix[0] = 0;
    for (int x = 0; x < w; ++x) prefix[x + 1] = prefix[x] + (mask(y, x) != 0);
    for (int x = 0; x < w; ++x) {
      const int lo = std::max(0, x - radius);
      const int hi = std::min(w, x + radius + 1);
      horizontal(y, x) = prefix[hi] - prefix[lo] > 0;
    }
  }
  Mask out(h, w);
  for (int x = 0; x < w; ++x) {
    prefix[0] = 0;
    for (int y = 0; y < h; ++y) prefix[y + 1] = prefix[y] + horizontal(y, x);
    for (int y = 0; y < h; ++y) {
      const int lo = std::max(0, y - radius);
      const int hi = std::min(h, y + radius + 1);
      out(y, x) = prefix[hi] - prefix[lo] > 0;
    }
  }
  return out;
}

}  // namespace

void RefineParams::validate() const {
  if (!(tau > 0.0f && tau <= 1.0f)) throw Error(ErrorKind::InvalidArgument, "tau must be in (0, 1]");
  if (window_radius < 1) throw Error(ErrorKind::InvalidArgument, "window_radius must be >= 1");
  if (max_passes < 1) throw Error(ErrorKind::InvalidArgument, "max_passes must be >= 1");
}

float mean_depth(const Mask& mask, const FloatGrid& depth) {
  if (!mask.same_dims(depth)) throw Error(ErrorKind::DimMismatch, "mask and depth dims differ");
  double sum = 0.0;
  std::size_t count = 0;
  const auto m = mask.data();
  const auto d = depth.data();
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i]) {
      sum += d[i];
      ++count;
    }
  }
  if (count == 0) throw Error(ErrorKind::EmptyMask, "mean depth of an empty mask");
  return static_cast<float>(sum / static_cast<double>(count));
}

RefinedPriors refine_masks(const std::vector<Mask>& masks, const FloatGrid& depth,
                           const RefineParams& params) {
  params.validate();
  for (const auto& m : masks) {
    if (!m.same_dims(depth)) throw Error(ErrorKind::DimMismatch, "mask and depth dims differ");
  }
  const int h = depth.height();
  const int w = depth.width();
  const std::size_t n_classes = masks.size();

  RefinedPriors out;
  out.refined_masks = masks;
  out.mean_depths.assign(n_classes, std::numeric_limits<float>::quiet_NaN());
  out.added_pixel_count.assign(n_classes, 0);

  // Number of classes owning each pixel; candidates must have zero owners.
  Grid2D<std::uint16_t> owners(h, w);
  for (const auto& m : masks) {
    for (std::size_t i = 0; i < m.size(); ++i) owners.data()[i] += m.data()[i] != 0;
  }

  for (int pass = 0; pass < params.max_passes; ++pass) {
    // Neighbourhoods and means are frozen at the start of the pass.
    std::vector<Mask> reach(n_classes);
    std::vector<bool> active(n_classes, false);
    for (std::size_t j = 0; j < n_classes; ++j) {
      const Mask& current = out.refined_masks[j];
      if (mask_area(current) == 0) continue;
      active[j] = true;
      out.mean_depths[j] = mean_depth(current, depth);
      reach[j] = dilate_square(current, params.window_radius);
    }

    std::size_t added_this_pass = 0;
    for (std::size_t j = 0; j < n_classes; ++j) {
      if (!active[j]) continue;
      const float mu = out.mean_depths[j];
      Mask& grown = out.refined_masks[j];
      const auto near = reach[j].data();
      auto own = owners.data();
      const auto d = depth.data();
      for (std::size_t i = 0; i < near.size(); ++i) {
        if (!near[i] || own[i] != 0) continue;
        if (std::fabs(d[i] - mu) < params.tau) {
          grown.data()[i] = 1;
          own[i] = 1;
          ++out.added_pixel_count[j];
          ++added_this_pass;
        }
      }
    }
    if (added_this_pass == 0) break;
  }
  return out;
}

RefinedPriors refine_masks(const PriorBundle& bundle, const RefineParams& params) {
  return refine_masks(bundle.semantic_masks, bundle.depth, params);
}

}  // namespace omnicount
