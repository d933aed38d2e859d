#include "omnicount/overlay.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <memory>

namespace omnicount {
namespace {

constexpr std::array<std::array<std::uint8_t, 3>, 8> kPalette = {{
    {230, 25, 75}, {60, 180, 75}, {0, 130, 200}, {245, 130, 48},
    {145, 30, 180}, {70, 240, 240}, {240, 50, 230}, {210, 245, 60},
}};

void blend(RgbImage& img, int y, int x, const std::array<std::uint8_t, 3>& color, int alpha) {
  for (int c = 0; c < 3; ++c) {
    const int v = (img(y, x, c) * (255 - alpha) + color[static_cast<std::size_t>(c)] * alpha) / 255;
    img(y, x, c) = static_cast<std::uint8_t>(v);
  }
}

bool on_boundary(const Mask& m, int y, int x) {
  constexpr int kDy[] = {-1, 1, 0, 0};
  constexpr int kDx[] = {0, 0, -1, 1};
  for (int k = 0; k < 4; ++k) {
    const int ny = y + kDy[k];
    const int nx = x + kDx[k];
    if (!m.in_bounds(ny, nx) || !m(ny, nx)) return true;
  }
  return false;
}

}  // namespace

RgbImage base_image(const PriorBundle& bundle) {
  RgbImage img(bundle.height, bundle.width, 3);
  if (bundle.rgb) {
    const auto data = bundle.rgb->data();
    const float peak = data.empty() ? 0.0f : *std::max_element(data.begin(), data.end());
    const float scale = peak <= 1.0f ? 255.0f : 1.0f;
    for (std::size_t i = 0; i < data.size(); ++i) {
      img.data()[i] = static_cast<std::uint8_t>(std::clamp(std::lround(data[i] * scale), 0L, 255L));
    }
  } else {
    for (int y = 0; y < bundle.height; ++y) {
      for (int x = 0; x < bundle.width; ++x) {
        const auto g = static_cast<std::uint8_t>(std::lround(bundle.depth(y, x) * 255.0f));
        for (int c = 0; c < 3; ++c) img(y, x, c) = g;
      }
    }
  }
  return img;
}

RgbImage render_overlay(const PriorBundle& bundle, const RefinedPriors& refined,
                        const CountResult& result) {
  RgbImage img = base_image(bundle);
  for (const auto& entry : result.classes) {
    const auto idx = bundle.class_index(entry.label);
    if (!idx) throw Error(ErrorKind::UnknownLabel, "\"" + entry.label + "\" not in bundle");
    const auto& color = kPalette[*idx % kPalette.size()];
    const Mask& mask = refined.refined_masks[*idx];
    if (!mask.same_dims(bundle.height, bundle.width)) {
      throw Error(ErrorKind::DimMismatch, "refined mask dims disagree with image");
    }
    for (int y = 0; y < bundle.height; ++y) {
      for (int x = 0; x < bundle.width; ++x) {
        if (mask(y, x)) blend(img, y, x, color, 90);
      }
    }
    if (entry.mask_set) {
      for (std::size_t i : entry.mask_set->filtered) {
        const Mask& inst = entry.mask_set->masks[i];
        if (!inst.same_dims(bundle.height, bundle.width)) {
          throw Error(ErrorKind::DimMismatch, "instance mask dims disagree with image");
        }
        for (int y = 0; y < inst.height(); ++y) {
          for (int x = 0; x < inst.width(); ++x) {
            if (inst(y, x) && on_boundary(inst, y, x)) blend(img, y, x, {255, 255, 255}, 255);
          }
        }
      }
    }
    for (const auto& p : entry.points) {
      const int py = static_cast<int>(std::lround(p.y));
      const int px = static_cast<int>(std::lround(p.x));
      for (int d = -2; d <= 2; ++d) {
        if (py >= 0 && py < bundle.height && px + d >= 0 && px + d < bundle.width) {
          blend(img, py, px + d, color, 255);
        }
        if (px >= 0 && px < bundle.width && py + d >= 0 && py + d < bundle.height) {
          blend(img, py + d, px, color, 255);
        }
      }
    }
  }
  return img;
}

void write_png(const RgbImage& image, const std::filesystem::path& path) {
  if (image.channels() != 3) throw Error(ErrorKind::InvalidArgument, "PNG writer expects RGB");
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.string().c_str(), "wb"), &std::fclose);
  if (!fp) throw Error(ErrorKind::IoFailure, "cannot open " + path.string());

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::IoFailure, "libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::IoFailure, "libpng write failed for " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width()),
               static_cast<png_uint_32>(image.height()), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = static_cast<std::size_t>(image.width()) * 3;
  for (int y = 0; y < image.height(); ++y) {
    png_write_row(png, const_cast<png_bytep>(image.data().data() + stride * static_cast<std::size_t>(y)));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace omnicount
