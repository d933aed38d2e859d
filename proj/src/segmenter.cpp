#include "omnicount/segmenter.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

namespace omnicount {

void SegmentParams::validate() const {
  if (min_area < 1) throw Error(ErrorKind::InvalidArgument, "min_area must be >= 1");
  if (!(flood_tau > 0.0f && flood_tau <= 1.0f)) {
    throw Error(ErrorKind::InvalidArgument, "flood_tau must be in (0, 1]");
  }
  if (dedupe_iou && !(*dedupe_iou > 0.0f && *dedupe_iou <= 1.0f)) {
    throw Error(ErrorKind::InvalidArgument, "dedupe_iou must be in (0, 1]");
  }
}

Volume extract_rgb_patch(const Volume& rgb, const Mask& mask) {
  if (rgb.height() != mask.height() || rgb.width() != mask.width()) {
    throw Error(ErrorKind::DimMismatch, "rgb and mask dims differ");
  }
  Volume out(rgb.height(), rgb.width(), rgb.channels());
  for (int y = 0; y < rgb.height(); ++y) {
    for (int x = 0; x < rgb.width(); ++x) {
      if (!mask(y, x)) continue;
      for (int c = 0; c < rgb.channels(); ++c) out(y, x, c) = rgb(y, x, c);
    }
  }
  return out;
}

InstanceMaskSet reference_segment(const Mask& class_mask, const FloatGrid& depth,
                                  const std::vector<RefPoint>& points,
                                  const SegmentParams& params) {
  if (!class_mask.same_dims(depth)) throw Error(ErrorKind::DimMismatch, "mask and depth dims differ");
  const int h = class_mask.height();
  const int w = class_mask.width();
  InstanceMaskSet out;
  Mask claimed(h, w);
  std::deque<std::pair<int, int>> frontier;
  constexpr int kDy[] = {-1, 1, 0, 0};
  constexpr int kDx[] = {0, 0, -1, 1};

  for (const auto& p : points) {
    const int sy = static_cast<int>(std::lround(p.y));
    const int sx = static_cast<int>(std::lround(p.x));
    if (!class_mask.in_bounds(sy, sx) || !class_mask(sy, sx) || claimed(sy, sx)) continue;

    const float seed_depth = depth(sy, sx);
    Mask instance(h, w);
    instance(sy, sx) = 1;
    claimed(sy, sx) = 1;
    frontier.emplace_back(sy, sx);
    while (!frontier.empty()) {
      const auto [y, x] = frontier.front();
      frontier.pop_front();
      for (int k = 0; k < 4; ++k) {
        const int ny = y + kDy[k];
        const int nx = x + kDx[k];
        if (!class_mask.in_bounds(ny, nx) || !class_mask(ny, nx) || claimed(ny, nx)) continue;
        if (!(std::fabs(depth(ny, nx) - seed_depth) < params.flood_tau)) continue;
        claimed(ny, nx) = 1;
        instance(ny, nx) = 1;
        frontier.emplace_back(ny, nx);
      }
    }
    out.masks.push_back(std::move(instance));
  }
  return out;
}

double mask_iou(const Mask& a, const Mask& b) {
  if (!a.same_dims(b)) throw Error(ErrorKind::DimMismatch, "mask dims differ");
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool ia = a.data()[i] != 0;
    const bool ib = b.data()[i] != 0;
    inter += ia && ib;
    uni += ia || ib;
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

InstanceMaskSet filter_masks(InstanceMaskSet set, const SegmentParams& params) {
  params.validate();
  std::vector<std::size_t> areas(set.masks.size());
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < set.masks.size(); ++i) {
    areas[i] = mask_area(set.masks[i]);
    if (areas[i] >= static_cast<std::size_t>(params.min_area)) keep.push_back(i);
  }
  if (params.dedupe_iou) {
    std::stable_sort(keep.begin(), keep.end(),
                     [&](std::size_t a, std::size_t b) { return areas[a] > areas[b]; });
    std::vector<std::size_t> kept;
    for (std::size_t i : keep) {
      const bool duplicate = std::any_of(kept.begin(), kept.end(), [&](std::size_t k) {
        return mask_iou(set.masks[i], set.masks[k]) > *params.dedupe_iou;
      });
      if (!duplicate) kept.push_back(i);
    }
    std::sort(kept.begin(), kept.end());
    keep = std::move(kept);
  }
  set.filtered = std::move(keep);
  return set;
}

std::size_t count(const InstanceMaskSet& set) { return set.filtered.size(); }

InstanceMaskSet ReferenceBackend::segment(const SegmentRequest& request) const {
  if (!request.class_mask || !request.depth) {
    throw Error(ErrorKind::InvalidArgument, "reference backend needs a class mask and depth");
  }
  auto set = reference_segment(*request.class_mask, *request.depth, request.points, params_);
  set.class_label = request.class_label;
  return set;
}

}  // namespace omnicount
