#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include "omnicount/segmenter.hpp"

namespace omnicount {

// File-exchange adapter to an out-of-process promptable segmenter.
//
// Request (written into the exchange directory):
//   patch.ocpt   HxWx3 f32 RGB patch
//   points.json  [{"y": .., "x": .., "score": ..}, ...]
// The command is run as `<command> <exchange_dir>` through /bin/sh.
// Response:
//   mask_000.ocpt ... mask_NNN.ocpt   HxW u8 masks
//   done.json                         {"n_masks": N}
struct ExternalConfig {
  std::string command;
  std::chrono::milliseconds timeout{std::chrono::seconds(120)};

  // Reads OMNI_SEG_CMD and OMNI_SEG_TIMEOUT_S; an unset command is left empty.
  static ExternalConfig from_env();
};

InstanceMaskSet external_segment(const Volume& rgb_patch, const std::vector<RefPoint>& points,
                                 const std::filesystem::path& exchange_dir,
                                 const ExternalConfig& config);

// One exchange subdirectory per request (<root>/<label>); single-flight per
// directory, so concurrent images should use distinct roots.
class ExternalBackend final : public SegmenterBackend {
 public:
  ExternalBackend(ExternalConfig config, std::filesystem::path exchange_root)
      : config_(std::move(config)), exchange_root_(std::move(exchange_root)) {}
  bool accepts_rgb() const override { return true; }
  bool accepts_depth() const override { return false; }
  InstanceMaskSet segment(const SegmentRequest& request) const override;

 private:
  ExternalConfig config_;
  std::filesystem::path exchange_root_;
};

}  // namespace omnicount
