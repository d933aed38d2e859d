#pragma once

#include <cstdint>
#include <filesystem>

#include "omnicount/pipeline.hpp"

namespace omnicount {

using RgbImage = Grid3D<std::uint8_t>;

// Base image: the bundle's RGB (values in [0,1] are scaled to bytes) or,
// without RGB, the depth map as grey levels.
RgbImage base_image(const PriorBundle& bundle);

// Tints refined masks, outlines filtered instances and marks reference points
// for every class present in the result. An empty result leaves the base
// image untouched.
RgbImage render_overlay(const PriorBundle& bundle, const RefinedPriors& refined,
                        const CountResult& result);

void write_png(const RgbImage& image, const std::filesystem::path& path);

}  // namespace omnicount
