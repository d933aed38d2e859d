#include "omnicount/prior_bundle.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "omnicount/tensor_io.hpp"

namespace omnicount {
namespace {

using nlohmann::json;

const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) {
    throw Error(ErrorKind::MissingField, where + ": missing \"" + key + "\"");
  }
  return *it;
}

Volume to_rgb_volume(AnyTensor tensor, const std::filesystem::path& path) {
  if (auto* v = std::get_if<Grid3D<float>>(&tensor)) return std::move(*v);
  if (auto* v = std::get_if<Grid3D<std::uint8_t>>(&tensor)) {
    Volume out(v->height(), v->width(), v->channels());
    std::transform(v->data().begin(), v->data().end(), out.data().begin(),
                   [](std::uint8_t b) { return static_cast<float>(b); });
    return out;
  }
  throw Error(ErrorKind::DimMismatch, path.string() + ": rgb must be a 3-D tensor");
}

FloatGrid to_activation(AnyTensor tensor, const std::filesystem::path& path) {
  if (auto* g = std::get_if<Grid2D<float>>(&tensor)) return std::move(*g);
  if (auto* v = std::get_if<Grid3D<float>>(&tensor); v && v->channels() == 1) {
    return FloatGrid(v->height(), v->width(),
                     std::vector<float>(v->data().begin(), v->data().end()));
  }
  throw Error(ErrorKind::UnsupportedDtype,
              path.string() + ": activation must be a 2-D f32 heatmap");
}

}  // namespace

std::optional<std::size_t> PriorBundle::class_index(std::string_view label) const {
  auto it = std::find(class_labels.begin(), class_labels.end(), label);
  if (it == class_labels.end()) return std::nullopt;
  return static_cast<std::size_t>(it - class_labels.begin());
}

int activation_extent(int full, int downsample_factor) {
  return (full + downsample_factor - 1) / downsample_factor;
}

void validate(const PriorBundle& b) {
  if (b.height <= 0 || b.width <= 0) {
    throw Error(ErrorKind::DimMismatch, "image dims must be positive");
  }
  if (b.downsample_factor < 1) {
    throw Error(ErrorKind::InvalidArgument, "downsample_factor must be >= 1");
  }
  if (b.semantic_masks.size() != b.class_labels.size() ||
      b.activations.size() != b.class_labels.size()) {
    throw Error(ErrorKind::DimMismatch, "per-class arrays disagree with class_labels");
  }
  std::set<std::string> seen;
  for (const auto& label : b.class_labels) {
    if (!seen.insert(label).second) {
      throw Error(ErrorKind::InvalidArgument, "duplicate class label \"" + label + "\"");
    }
  }
  const int ah = activation_extent(b.height, b.downsample_factor);
  const int aw = activation_extent(b.width, b.downsample_factor);
  for (std::size_t i = 0; i < b.class_labels.size(); ++i) {
    const auto& m = b.semantic_masks[i];
    if (!m.same_dims(b.height, b.width)) {
      throw Error(ErrorKind::DimMismatch, "mask of \"" + b.class_labels[i] + "\" is " +
                                              std::to_string(m.height()) + "x" +
                                              std::to_string(m.width()));
    }
    if (std::any_of(m.data().begin(), m.data().end(), [](auto v) { return v > 1; })) {
      throw Error(ErrorKind::InvalidMask, "mask of \"" + b.class_labels[i] + "\" is not binary");
    }
    if (b.activations[i] && !b.activations[i]->same_dims(ah, aw)) {
      throw Error(ErrorKind::DimMismatch, "activation of \"" + b.class_labels[i] +
                                              "\" must be " + std::to_string(ah) + "x" +
                                              std::to_string(aw));
    }
  }
  if (!b.depth.same_dims(b.height, b.width)) {
    throw Error(ErrorKind::DimMismatch, "depth dims disagree with image dims");
  }
  for (float d : b.depth.data()) {
    if (!(d >= 0.0f && d <= 1.0f)) {
      throw Error(ErrorKind::DepthOutOfRange, "depth value " + std::to_string(d) +
                                                  " outside [0,1]");
    }
  }
  if (b.rgb && (b.rgb->height() != b.height || b.rgb->width() != b.width ||
                b.rgb->channels() != 3)) {
    throw Error(ErrorKind::DimMismatch, "rgb must be HxWx3");
  }
}

PriorBundle load_prior_bundle(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open manifest " + manifest_path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ParseError, manifest_path.string() + ": " + e.what());
  }
  const std::string where = manifest_path.string();
  const auto base = manifest_path.parent_path();

  PriorBundle b;
  try {
    b.image_id = require(doc, "image_id", where).get<std::string>();
    const auto& dims = require(doc, "image_dims", where);
    if (!dims.is_array() || dims.size() != 2) {
      throw Error(ErrorKind::MissingField, where + ": image_dims must be [H, W]");
    }
    b.height = dims[0].get<int>();
    b.width = dims[1].get<int>();
    b.downsample_factor = doc.value("downsample_factor", kDefaultDownsampleFactor);
    b.channel_dim = doc.value("channel_dim", kDefaultChannelDim);

    for (const auto& cls : require(doc, "classes", where)) {
      b.class_labels.push_back(require(cls, "label", where).get<std::string>());
      b.semantic_masks.push_back(read_mask_file(base / require(cls, "mask", where).get<std::string>()));
      if (auto it = cls.find("activation"); it != cls.end() && !it->is_null()) {
        const auto path = base / it->get<std::string>();
        b.activations.emplace_back(to_activation(read_tensor_file(path), path));
      } else {
        b.activations.emplace_back(std::nullopt);
      }
    }
    b.depth = read_float_grid_file(base / require(doc, "depth", where).get<std::string>());
    if (auto it = doc.find("rgb"); it != doc.end() && !it->is_null()) {
      const auto path = base / it->get<std::string>();
      b.rgb = to_rgb_volume(read_tensor_file(path), path);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, where + ": " + e.what());
  }
  validate(b);
  return b;
}

void save_prior_bundle(const PriorBundle& b, const std::filesystem::path& manifest_path) {
  const auto base = manifest_path.parent_path();
  if (!base.empty()) std::filesystem::create_directories(base);
  const std::string stem = manifest_path.stem().string();

  json doc;
  doc["image_id"] = b.image_id;
  doc["image_dims"] = {b.height, b.width};
  doc["downsample_factor"] = b.downsample_factor;
  doc["channel_dim"] = b.channel_dim;
  doc["classes"] = json::array();
  for (std::size_t i = 0; i < b.class_labels.size(); ++i) {
    json cls;
    cls["label"] = b.class_labels[i];
    const std::string mask_name = stem + "_mask_" + std::to_string(i) + ".ocpt";
    write_tensor_file(b.semantic_masks[i], base / mask_name);
    cls["mask"] = mask_name;
    if (b.activations[i]) {
      const std::string act_name = stem + "_act_" + std::to_string(i) + ".ocpt";
      write_tensor_file(*b.activations[i], base / act_name);
      cls["activation"] = act_name;
    }
    doc["classes"].push_back(std::move(cls));
  }
  const std::string depth_name = stem + "_depth.ocpt";
  write_tensor_file(b.depth, base / depth_name);
  doc["depth"] = depth_name;
  if (b.rgb) {
    const std::string rgb_name = stem + "_rgb.ocpt";
    write_tensor_file(*b.rgb, base / rgb_name);
    doc["rgb"] = rgb_name;
  }
  std::ofstream out(manifest_path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + manifest_path.string());
  out << doc.dump(2) << '\n';
}

}  // namespace omnicount
