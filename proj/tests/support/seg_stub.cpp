// Stand-in for an external promptable segmenter, speaking the exchange
// protocol. Usage: seg_stub <mode> [arg] <exchange_dir>
//   echo <mask.ocpt>  return that mask as the only instance
//   flood             one mask per prompt: 4-connected same-colour region
//   fail              exit 3 without a response
//   wrongdims         return a 1x1 mask
//   sleep             hang for 30 s
//   nodone            write masks but no done.json

#include <chrono>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "omnicount/tensor_io.hpp"

namespace fs = std::filesystem;
using namespace omnicount;

namespace {

void write_done(const fs::path& dir, std::size_t n) {
  std::ofstream(dir / "done.json") << nlohmann::json{{"n_masks", n}}.dump() << '\n';
}

std::string mask_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "mask_%03zu.ocpt", i);
  return buf;
}

bool same_colour(const Volume& v, int y0, int x0, int y1, int x1) {
  for (int c = 0; c < v.channels(); ++c) {
    if (v(y0, x0, c) != v(y1, x1, c)) return false;
  }
  return true;
}

bool is_background(const Volume& v, int y, int x) {
  for (int c = 0; c < v.channels(); ++c) {
    if (v(y, x, c) != 0.0f) return false;
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: seg_stub <mode> [arg] <dir>\n";
    return 2;
  }
  const std::string mode = argv[1];
  const fs::path dir = argv[argc - 1];
  try {
    const auto patch_any = read_tensor_file(dir / "patch.ocpt");
    const auto& patch = std::get<Grid3D<float>>(patch_any);
    std::ifstream pin(dir / "points.json");
    const auto points = nlohmann::json::parse(pin);

    if (mode == "fail") return 3;
    if (mode == "sleep") {
      std::this_thread::sleep_for(std::chrono::seconds(30));
      return 0;
    }
    if (mode == "echo") {
      fs::copy_file(argv[2], dir / mask_name(0), fs::copy_options::overwrite_existing);
      write_done(dir, 1);
      return 0;
    }
    if (mode == "wrongdims") {
      write_tensor_file(Mask(1, 1, 1), dir / mask_name(0));
      write_done(dir, 1);
      return 0;
    }
    if (mode == "flood" || mode == "nodone") {
      const int h = patch.height();
      const int w = patch.width();
      Mask claimed(h, w);
      std::size_t n = 0;
      for (const auto& p : points) {
        const int sy = static_cast<int>(std::lround(p.at("y").get<double>()));
        const int sx = static_cast<int>(std::lround(p.at("x").get<double>()));
        if (sy < 0 || sx < 0 || sy >= h || sx >= w || claimed(sy, sx) || is_background(patch, sy, sx)) {
          continue;
        }
        Mask inst(h, w);
        std::deque<std::pair<int, int>> q{{sy, sx}};
        inst(sy, sx) = claimed(sy, sx) = 1;
        while (!q.empty()) {
          auto [y, x] = q.front();
          q.pop_front();
          const int dy[] = {-1, 1, 0, 0};
          const int dx[] = {0, 0, -1, 1};
          for (int k = 0; k < 4; ++k) {
            const int ny = y + dy[k];
            const int nx = x + dx[k];
            if (ny < 0 || nx < 0 || ny >= h || nx >= w || claimed(ny, nx)) continue;
            if (!same_colour(patch, ny, nx, sy, sx)) continue;
            inst(ny, nx) = claimed(ny, nx) = 1;
            q.emplace_back(ny, nx);
          }
        }
        write_tensor_file(inst, dir / mask_name(n++));
      }
      if (mode == "flood") write_done(dir, n);
      return 0;
    }
    std::cerr << "unknown mode " << mode << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "seg_stub: " << e.what() << '\n';
    return 4;
  }
}
