#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "omnicount/grid.hpp"

namespace omnicount {

inline constexpr int kDefaultDownsampleFactor = 16;
inline constexpr int kDefaultChannelDim = 256;

// Per-image package of externally produced priors: one binary semantic mask
// and one low-resolution activation heatmap per class label, plus a
// normalized depth map and (optionally) the RGB image.
struct PriorBundle {
  std::string image_id;
  int height = 0;
  int width = 0;
  std::vector<std::string> class_labels;
  std::vector<Mask> semantic_masks;
  std::vector<std::optional<FloatGrid>> activations;
  FloatGrid depth;
  int downsample_factor = kDefaultDownsampleFactor;
  int channel_dim = kDefaultChannelDim;
  std::optional<Volume> rgb;

  std::optional<std::size_t> class_index(std::string_view label) const;
};

// Activation grid dims for an image of the given size: (ceil(H/K), ceil(W/K)).
int activation_extent(int full, int downsample_factor);

// Throws a typed Error on the first violated invariant.
void validate(const PriorBundle& bundle);

PriorBundle load_prior_bundle(const std::filesystem::path& manifest_path);

// Writes tensors next to the manifest (mask_<i>.ocpt, act_<i>.ocpt, depth.ocpt,
// rgb.ocpt) with relative paths. Used by fixtures and the scene generator.
void save_prior_bundle(const PriorBundle& bundle, const std::filesystem::path& manifest_path);

}  // namespace omnicount
