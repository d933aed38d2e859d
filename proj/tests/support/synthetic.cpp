#include "synthetic.hpp"

#include <algorithm>
#include <cmath>

namespace omnicount::testing {
namespace {

constexpr float kBackgroundDepth = 0.95f;
constexpr float kBandGap = 0.32f;
constexpr int kMargin = 14;

float uniform(std::mt19937_64& rng, float lo, float hi) {
  return std::uniform_real_distribution<float>(lo, hi)(rng);
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

bool compatible(const Disk& a, const Disk& b) {
  const float d = std::hypot(a.cy - b.cy, a.cx - b.cx);
  // Opposite bands may touch; equal bands keep a background gap.
  const float need = a.r + b.r + (a.band == b.band ? 2.5f : 0.6f);
  return d >= need;
}

double class_mean(const Mask& mask, const FloatGrid& depth) {
  double sum = 0.0;
  long n = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask.data()[i]) {
      sum += depth.data()[i];
      ++n;
    }
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

}  // namespace

FloatGrid gaussian_field(int h, int w, const std::vector<Bump>& bumps, float noise,
                         std::mt19937_64& rng) {
  FloatGrid field(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double v = noise > 0.0f ? uniform(rng, 0.0f, noise) : 0.0f;
      for (const auto& b : bumps) {
        const double dy = y - b.cy;
        const double dx = x - b.cx;
        v += std::exp(-(dy * dy + dx * dx) / (2.0 * b.sigma * b.sigma));
      }
      field(y, x) = static_cast<float>(v);
    }
  }
  return field;
}

Scene generate_scene(std::uint64_t seed, const SceneOptions& opt) {
  std::mt19937_64 rng(seed);
  Scene scene;
  const int n_classes = uniform_int(rng, 1, opt.max_classes);
  std::vector<int> wanted(static_cast<std::size_t>(n_classes));
  for (auto& n : wanted) n = uniform_int(rng, opt.min_instances, opt.max_instances);
  const int busiest = *std::max_element(wanted.begin(), wanted.end());

  const int quad = 32 + static_cast<int>(std::ceil(18.0 * std::sqrt(static_cast<double>(busiest))));
  const int cols = n_classes >= 2 ? 2 : 1;
  const int rows = n_classes >= 3 ? 2 : 1;
  const int h = rows * quad;
  const int w = cols * quad;
  const int k = opt.downsample_factor;

  PriorBundle& b = scene.bundle;
  b.image_id = "scene_" + std::to_string(seed);
  b.height = h;
  b.width = w;
  b.downsample_factor = k;
  b.depth = FloatGrid(h, w);
  for (auto& d : b.depth.data()) d = kBackgroundDepth + uniform(rng, 0.0f, 0.05f);

  const int ah = activation_extent(h, k);
  const int aw = activation_extent(w, k);
  scene.disks.resize(static_cast<std::size_t>(n_classes));
  scene.fragments.assign(static_cast<std::size_t>(n_classes), 0);

  for (int c = 0; c < n_classes; ++c) {
    const int qy0 = (c / 2) * quad;
    const int qx0 = (c % 2) * quad;
    const float base = uniform(rng, 0.10f, 0.25f);
    auto& disks = scene.disks[static_cast<std::size_t>(c)];

    for (int i = 0; i < wanted[static_cast<std::size_t>(c)]; ++i) {
      for (int attempt = 0; attempt < 400; ++attempt) {
        Disk d;
        d.r = uniform(rng, 4.0f, 7.0f);
        const bool touch = !disks.empty() && uniform(rng, 0.0f, 1.0f) < 0.35f;
        if (touch) {
          const Disk& other = disks[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(disks.size()) - 1))];
          const float angle = uniform(rng, 0.0f, 6.2831853f);
          const float dist = other.r + d.r + 0.7f;
          d.cy = other.cy + dist * std::sin(angle);
          d.cx = other.cx + dist * std::cos(angle);
          d.band = 1 - other.band;
        } else {
          d.cy = uniform(rng, static_cast<float>(qy0 + kMargin) + d.r, static_cast<float>(qy0 + quad - kMargin) - d.r);
          d.cx = uniform(rng, static_cast<float>(qx0 + kMargin) + d.r, static_cast<float>(qx0 + quad - kMargin) - d.r);
          d.band = uniform_int(rng, 0, 1);
        }
        if (d.cy - d.r < qy0 + kMargin || d.cy + d.r > qy0 + quad - kMargin ||
            d.cx - d.r < qx0 + kMargin || d.cx + d.r > qx0 + quad - kMargin) {
          continue;
        }
        if (!std::all_of(disks.begin(), disks.end(), [&](const Disk& o) { return compatible(d, o); })) {
          continue;
        }
        d.depth = base + kBandGap * static_cast<float>(d.band) + uniform(rng, -0.005f, 0.005f);
        disks.push_back(d);
        break;
      }
    }

    Mask full(h, w);
    for (const auto& d : disks) {
      const int y0 = std::max(0, static_cast<int>(std::floor(d.cy - d.r)));
      const int y1 = std::min(h - 1, static_cast<int>(std::ceil(d.cy + d.r)));
      const int x0 = std::max(0, static_cast<int>(std::floor(d.cx - d.r)));
      const int x1 = std::min(w - 1, static_cast<int>(std::ceil(d.cx + d.r)));
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          if (d.contains(y, x)) {
            full(y, x) = 1;
            b.depth(y, x) = d.depth;
          }
        }
      }
    }

    Mask coarse = full;
    std::vector<Bump> bumps;
    for (const auto& d : disks) {
      const float s = 0.45f * d.r / static_cast<float>(k);
      bumps.push_back({(d.cy + 0.5f) / k - 0.5f, (d.cx + 0.5f) / k - 0.5f, s});
    }

    if (opt.occluded) {
      auto clear_of_disks = [&](float y, float x, float pad) {
        return std::all_of(disks.begin(), disks.end(), [&](const Disk& d) {
          return std::hypot(d.cy - y, d.cx - x) > d.r + pad;
        });
      };
      // Spurious background-depth fragments in the semantic mask.
      const int n_frag = disks.size() >= 4 ? uniform_int(rng, 1, 2) : 0;
      std::vector<std::pair<int, int>> frags;
      for (int f = 0; f < n_frag; ++f) {
        for (int attempt = 0; attempt < 200; ++attempt) {
          const int fy = uniform_int(rng, qy0 + kMargin, qy0 + quad - kMargin - 7);
          const int fx = uniform_int(rng, qx0 + kMargin, qx0 + quad - kMargin - 7);
          if (!clear_of_disks(fy + 3.0f, fx + 3.0f, 8.0f)) continue;
          bool apart = true;
          for (auto [py, px] : frags) apart = apart && (std::abs(py - fy) > 10 || std::abs(px - fx) > 10);
          if (!apart) continue;
          frags.emplace_back(fy, fx);
          break;
        }
      }
      Mask with_frags = coarse;
      for (auto [fy, fx] : frags) {
        for (int y = fy; y < fy + 7; ++y) {
          for (int x = fx; x < fx + 7; ++x) with_frags(y, x) = 1;
        }
      }
      if (!frags.empty() && kBackgroundDepth - class_mean(with_frags, b.depth) >= kBandGap) {
        coarse = with_frags;
        scene.fragments[static_cast<std::size_t>(c)] = static_cast<int>(frags.size());
      } else {
        frags.clear();
      }

      // Cut the upper part of some disks out of the semantic mask; keep a cut
      // only while the disk's depth stays recoverable against the class mean.
      for (auto& d : disks) d.damaged = uniform(rng, 0.0f, 1.0f) < 0.35f;
      for (int iter = 0; iter < 6; ++iter) {
        Mask cut = coarse;
        for (const auto& d : disks) {
          if (!d.damaged) continue;
          for (int y = static_cast<int>(std::floor(d.cy - d.r)); y <= static_cast<int>(d.cy + 1.5f); ++y) {
            for (int x = static_cast<int>(std::floor(d.cx - d.r)); x <= static_cast<int>(std::ceil(d.cx + d.r)); ++x) {
              if (cut.in_bounds(y, x) && d.contains(y, x) && static_cast<float>(y) <= d.cy + 1.5f) cut(y, x) = 0;
            }
          }
        }
        const double mean = class_mean(cut, b.depth);
        bool changed = false;
        for (auto& d : disks) {
          if (d.damaged && std::fabs(d.depth - mean) >= 0.25) {
            d.damaged = false;
            changed = true;
          }
        }
        if (!changed) {
          coarse = cut;
          break;
        }
        if (iter == 5) {
          for (auto& d : disks) d.damaged = false;
        }
      }

      // Background activation that gating has to reject.
      const int n_bg = uniform_int(rng, 1, 3);
      for (int i = 0; i < n_bg; ++i) {
        for (int attempt = 0; attempt < 200; ++attempt) {
          const float y = uniform(rng, qy0 + kMargin, qy0 + quad - kMargin);
          const float x = uniform(rng, qx0 + kMargin, qx0 + quad - kMargin);
          if (!clear_of_disks(y, x, 8.0f)) continue;
          bool off_frag = true;
          for (auto [fy, fx] : frags) {
            off_frag = off_frag && !(y > fy - 6 && y < fy + 13 && x > fx - 6 && x < fx + 13);
          }
          if (!off_frag) continue;
          bumps.push_back({(y + 0.5f) / k - 0.5f, (x + 0.5f) / k - 0.5f, 1.0f});
          break;
        }
      }
    }

    b.class_labels.push_back("class_" + std::to_string(c));
    b.semantic_masks.push_back(std::move(coarse));
    b.activations.emplace_back(gaussian_field(ah, aw, bumps, 0.02f, rng));
    scene.gt_counts.push_back(static_cast<int>(disks.size()));
  }

  if (opt.with_rgb) {
    // Each instance gets its own colour; background is black.
    Volume rgb(h, w, 3);
    int id = 0;
    for (const auto& disks : scene.disks) {
      for (const auto& d : disks) {
        ++id;
        const float col[3] = {static_cast<float>(40 + (id * 37) % 200), static_cast<float>(40 + (id * 91) % 200),
                              static_cast<float>(40 + (id * 53) % 200)};
        for (int y = 0; y < h; ++y) {
          for (int x = 0; x < w; ++x) {
            if (d.contains(y, x)) {
              for (int ch = 0; ch < 3; ++ch) rgb(y, x, ch) = col[ch];
            }
          }
        }
      }
    }
    b.rgb = std::move(rgb);
  }
  return scene;
}

}  // namespace omnicount::testing
