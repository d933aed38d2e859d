#include "omnicount/tensor_io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

namespace omnicount {
namespace {

constexpr std::size_t kHeaderFixed = kTensorMagic.size() + 2;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[offset + i]) << (8 * i);
  return v;
}

void put_payload(std::vector<std::uint8_t>& out, std::span<const std::uint8_t> data) {
  out.insert(out.end(), data.begin(), data.end());
}

void put_payload(std::vector<std::uint8_t>& out, std::span<const float> data) {
  out.reserve(out.size() + data.size() * 4);
  for (float f : data) put_u32(out, std::bit_cast<std::uint32_t>(f));
}

std::uint32_t checked_u32(int dim) {
  if (dim < 0) throw Error(ErrorKind::InvalidArgument, "negative dimension");
  return static_cast<std::uint32_t>(dim);
}

template <typename T>
constexpr Dtype dtype_of() {
  if constexpr (std::is_same_v<T, std::uint8_t>) {
    return Dtype::U8;
  } else {
    return Dtype::F32;
  }
}

template <typename T>
std::vector<T> decode_payload(std::span<const std::uint8_t> payload, std::size_t count) {
  std::vector<T> out(count);
  if constexpr (std::is_same_v<T, std::uint8_t>) {
    std::copy_n(payload.begin(), count, out.begin());
  } else {
    for (std::size_t i = 0; i < count; ++i) out[i] = std::bit_cast<float>(get_u32(payload, 4 * i));
  }
  return out;
}

template <typename T>
AnyTensor build(const std::vector<std::uint32_t>& dims, std::span<const std::uint8_t> payload,
                std::size_t count) {
  auto data = decode_payload<T>(payload, count);
  const int h = static_cast<int>(dims[0]);
  const int w = static_cast<int>(dims[1]);
  if (dims.size() == 2) return Grid2D<T>(h, w, std::move(data));
  return Grid3D<T>(h, w, static_cast<int>(dims[2]), std::move(data));
}

}  // namespace

std::vector<std::uint8_t> encode_tensor(const AnyTensor& tensor) {
  std::vector<std::uint8_t> out(kTensorMagic.begin(), kTensorMagic.end());
  std::visit(
      [&out](const auto& grid) {
        using G = std::decay_t<decltype(grid)>;
        using T = typename G::value_type;
        out.push_back(static_cast<std::uint8_t>(dtype_of<T>()));
        if constexpr (std::is_same_v<G, Grid2D<T>>) {
          out.push_back(2);
          put_u32(out, checked_u32(grid.height()));
          put_u32(out, checked_u32(grid.width()));
        } else {
          out.push_back(3);
          put_u32(out, checked_u32(grid.height()));
          put_u32(out, checked_u32(grid.width()));
          put_u32(out, checked_u32(grid.channels()));
        }
        put_payload(out, grid.data());
      },
      tensor);
  return out;
}

AnyTensor decode_tensor(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kTensorMagic.size() ||
      !std::equal(kTensorMagic.begin(), kTensorMagic.end(), bytes.begin())) {
    throw Error(ErrorKind::BadMagic, "missing OCPT magic");
  }
  if (bytes.size() < kHeaderFixed) throw Error(ErrorKind::TruncatedPayload, "header truncated");
  const std::uint8_t dtype_code = bytes[8];
  const std::uint8_t ndim = bytes[9];
  if (dtype_code > 1) {
    throw Error(ErrorKind::UnsupportedDtype, "dtype code " + std::to_string(dtype_code));
  }
  if (ndim != 2 && ndim != 3) {
    throw Error(ErrorKind::UnsupportedDtype, "ndim " + std::to_string(ndim));
  }
  const std::size_t header = kHeaderFixed + 4u * ndim;
  if (bytes.size() < header) throw Error(ErrorKind::TruncatedPayload, "dims truncated");

  std::vector<std::uint32_t> dims;
  std::size_t count = 1;
  for (std::size_t i = 0; i < ndim; ++i) {
    dims.push_back(get_u32(bytes, kHeaderFixed + 4 * i));
    if (dims.back() > static_cast<std::uint32_t>(std::numeric_limits<int>::max())) {
      throw Error(ErrorKind::UnsupportedDtype, "dimension exceeds int range");
    }
    count *= dims.back();
  }
  const std::size_t elem = dtype_code == 0 ? 1 : 4;
  const auto payload = bytes.subspan(header);
  if (payload.size() < count * elem) {
    throw Error(ErrorKind::TruncatedPayload, "payload has " + std::to_string(payload.size()) +
                                                 " bytes, expected " +
                                                 std::to_string(count * elem));
  }
  return dtype_code == 0 ? build<std::uint8_t>(dims, payload, count)
                         : build<float>(dims, payload, count);
}

void write_tensor_file(const AnyTensor& tensor, const std::filesystem::path& path) {
  const auto bytes = encode_tensor(tensor);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::IoFailure, "write failed for " + path.string());
}

AnyTensor read_tensor_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_tensor(bytes);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

Mask read_mask_file(const std::filesystem::path& path) {
  auto tensor = read_tensor_file(path);
  if (auto* m = std::get_if<Grid2D<std::uint8_t>>(&tensor)) return std::move(*m);
  if (std::holds_alternative<Grid2D<float>>(tensor)) {
    throw Error(ErrorKind::UnsupportedDtype, path.string() + ": mask must be u8");
  }
  throw Error(ErrorKind::DimMismatch, path.string() + ": expected a 2-D tensor");
}

FloatGrid read_float_grid_file(const std::filesystem::path& path) {
  auto tensor = read_tensor_file(path);
  if (auto* g = std::get_if<Grid2D<float>>(&tensor)) return std::move(*g);
  if (std::holds_alternative<Grid2D<std::uint8_t>>(tensor)) {
    throw Error(ErrorKind::UnsupportedDtype, path.string() + ": expected f32");
  }
  throw Error(ErrorKind::DimMismatch, path.string() + ": expected a 2-D tensor");
}

}  // namespace omnicount
