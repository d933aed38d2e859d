#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <variant>
#include <vector>

#include "omnicount/grid.hpp"

namespace omnicount {

// .ocpt tensor file:
//   magic "OCPT\0\0\0\1" (8) | dtype u8 (0=u8, 1=f32) | ndim u8 (2|3)
//   | dims u32 LE each | payload LE row-major
inline constexpr std::array<std::uint8_t, 8> kTensorMagic = {'O', 'C', 'P', 'T', 0, 0, 0, 1};

enum class Dtype : std::uint8_t { U8 = 0, F32 = 1 };

using AnyTensor = std::variant<Grid2D<std::uint8_t>, Grid2D<float>, Grid3D<std::uint8_t>,
                               Grid3D<float>>;

std::vector<std::uint8_t> encode_tensor(const AnyTensor& tensor);
AnyTensor decode_tensor(std::span<const std::uint8_t> bytes);

void write_tensor_file(const AnyTensor& tensor, const std::filesystem::path& path);
AnyTensor read_tensor_file(const std::filesystem::path& path);

// Typed convenience readers; a tensor of another dtype/rank raises
// UnsupportedDtype (dtype) or DimMismatch (rank).
Mask read_mask_file(const std::filesystem::path& path);
FloatGrid read_float_grid_file(const std::filesystem::path& path);

}  // namespace omnicount
