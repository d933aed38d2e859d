#include "omnicount/refpoints.hpp"

#include <algorithm>
#include <cmath>

namespace omnicount {
namespace {

constexpr float kLogFloor = 1e-8f;

std::vector<double> gaussian_kernel_1d(float sigma, int side) {
  const int half = side / 2;
  std::vector<double> k(static_cast<std::size_t>(side));
  double sum = 0.0;
  for (int i = -half; i <= half; ++i) {
    const double v = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
    k[static_cast<std::size_t>(i + half)] = v;
    sum += v;
  }
  for (auto& v : k) v /= sum;
  return k;
}

// Separable blur with replicated borders.
Grid2D<double> blur(const FloatGrid& src, const std::vector<double>& kernel) {
  const int h = src.height();
  const int w = src.width();
  const int half = static_cast<int>(kernel.size()) / 2;
  Grid2D<double> tmp(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -half; k <= half; ++k) {
        acc += kernel[static_cast<std::size_t>(k + half)] * src(y, std::clamp(x + k, 0, w - 1));
      }
      tmp(y, x) = acc;
    }
  }
  Grid2D<double> out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -half; k <= half; ++k) {
        acc += kernel[static_cast<std::size_t>(k + half)] * tmp(std::clamp(y + k, 0, h - 1), x);
      }
      out(y, x) = acc;
    }
  }
  return out;
}

}  // namespace

void PointParams::validate() const {
  if (!(sigma > 0.0f)) throw Error(ErrorKind::InvalidArgument, "sigma must be > 0");
  if (kernel_side() < 3) throw Error(ErrorKind::InvalidArgument, "omega must give a kernel side >= 3");
  if (!(max_offset > 0.0f && max_offset <= 0.5f)) {
    throw Error(ErrorKind::InvalidArgument, "max_offset must be in (0, 0.5]");
  }
}

std::vector<RefPoint> find_local_maxima(const FloatGrid& heatmap, float score_threshold) {
  std::vector<RefPoint> peaks;
  if (heatmap.empty()) return peaks;
  const auto [lo_it, hi_it] = std::minmax_element(heatmap.data().begin(), heatmap.data().end());
  const float lo = *lo_it;
  const float range = *hi_it - lo;
  if (!(range > 0.0f)) return peaks;

  const int h = heatmap.height();
  const int w = heatmap.width();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const float v = heatmap(y, x);
      if ((v - lo) / range < score_threshold) continue;
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if ((dy != 0 || dx != 0) && heatmap.in_bounds(y + dy, x + dx) &&
              !(v > heatmap(y + dy, x + dx))) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) peaks.push_back({static_cast<float>(y), static_cast<float>(x), v});
    }
  }
  return peaks;
}

std::vector<RefPoint> gaussian_refine(const FloatGrid& heatmap, const std::vector<RefPoint>& peaks,
                                      const PointParams& params) {
  params.validate();
  std::vector<RefPoint> out = peaks;
  if (peaks.empty()) return out;

  auto smooth = blur(heatmap, gaussian_kernel_1d(params.sigma, params.kernel_side()));
  // Rescale so the modulated map keeps the original peak value.
  const double orig_max = *std::max_element(heatmap.data().begin(), heatmap.data().end());
  const double smooth_max = *std::max_element(smooth.data().begin(), smooth.data().end());
  if (smooth_max > 0.0 && orig_max > 0.0) {
    const double scale = orig_max / smooth_max;
    for (auto& v : smooth.data()) v *= scale;
  }
  for (auto& v : smooth.data()) v = std::log(std::max(v, static_cast<double>(kLogFloor)));

  const int h = heatmap.height();
  const int w = heatmap.width();
  for (auto& p : out) {
    const int y = static_cast<int>(std::lround(p.y));
    const int x = static_cast<int>(std::lround(p.x));
    if (y < 1 || x < 1 || y >= h - 1 || x >= w - 1) continue;

    const double c = smooth(y, x);
    const double gy = 0.5 * (smooth(y + 1, x) - smooth(y - 1, x));
    const double gx = 0.5 * (smooth(y, x + 1) - smooth(y, x - 1));
    const double hyy = smooth(y + 1, x) - 2.0 * c + smooth(y - 1, x);
    const double hxx = smooth(y, x + 1) - 2.0 * c + smooth(y, x - 1);
    const double hxy = 0.25 * (smooth(y + 1, x + 1) - smooth(y + 1, x - 1) -
                               smooth(y - 1, x + 1) + smooth(y - 1, x - 1));
    const double det = hyy * hxx - hxy * hxy;
    if (!(hyy < 0.0 && det > 0.0) || !std::isfinite(det)) continue;

    // delta = -H^-1 g
    const double dy = -(hxx * gy - hxy * gx) / det;
    const double dx = -(-hxy * gy + hyy * gx) / det;
    const double lim = params.max_offset;
    p.y = static_cast<float>(y + std::clamp(dy, -lim, lim));
    p.x = static_cast<float>(x + std::clamp(dx, -lim, lim));
  }
  return out;
}

std::vector<RefPoint> upscale_points(const std::vector<RefPoint>& points, int downsample_factor,
                                     int height, int width) {
  if (downsample_factor < 1) throw Error(ErrorKind::InvalidArgument, "downsample_factor must be >= 1");
  const float k = static_cast<float>(downsample_factor);
  const float max_y = static_cast<float>(std::max(height - 1, 0));
  const float max_x = static_cast<float>(std::max(width - 1, 0));
  std::vector<RefPoint> out;
  out.reserve(points.size());
  for (const auto& p : points) {
    out.push_back({std::clamp((p.y + 0.5f) * k - 0.5f, 0.0f, max_y),
                   std::clamp((p.x + 0.5f) * k - 0.5f, 0.0f, max_x), p.score});
  }
  return out;
}

std::vector<RefPoint> gate_points(const std::vector<RefPoint>& points, const Mask& mask) {
  std::vector<RefPoint> out;
  for (const auto& p : points) {
    const int y = static_cast<int>(std::lround(p.y));
    const int x = static_cast<int>(std::lround(p.x));
    if (mask.in_bounds(y, x) && mask(y, x) == 1) out.push_back(p);
  }
  return out;
}

std::vector<RefPoint> select_class_points(const FloatGrid& activation, const Mask& refined_mask,
                                          int downsample_factor, const PointParams& params) {
  if (mask_area(refined_mask) == 0) return {};
  const auto peaks = find_local_maxima(activation, params.score_threshold);
  const auto refined = gaussian_refine(activation, peaks, params);
  return gate_points(
      upscale_points(refined, downsample_factor, refined_mask.height(), refined_mask.width()),
      refined_mask);
}

ClassPoints select_reference_points(const PriorBundle& bundle, const RefinedPriors& refined,
                                    const PointParams& params) {
  params.validate();
  ClassPoints out(bundle.class_labels.size());
  for (std::size_t m = 0; m < bundle.class_labels.size(); ++m) {
    if (!bundle.activations[m]) {
      throw Error(ErrorKind::MissingField,
                  "no activation for class \"" + bundle.class_labels[m] + "\"");
    }
    out[m] = select_class_points(*bundle.activations[m], refined.refined_masks[m],
                                 bundle.downsample_factor, params);
  }
  return out;
}

}  // namespace omnicount
