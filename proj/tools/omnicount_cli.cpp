// omnicount: batch front end for the counting engine.
//
//   omnicount count  -m <manifest|dir>... [--labels a,b] [--backend reference|external] ...
//   omnicount eval   --pred results.jsonl --gt annotations.jsonl [--out report.json]
//   omnicount viz    -m manifest.json --result results.jsonl --out overlay.png
//   omnicount refine -m <manifest|dir>... --out <dir>
//   omnicount points -m <manifest|dir>... [--out points.json]
//   omnicount split  --annotations a.jsonl --mode zero-shot|few-shot [--seed N] --out split.json
//
// Exit codes: 0 success, 1 configuration error, 2 I/O or data error.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "omnicount/annotations.hpp"
#include "omnicount/evaluate.hpp"
#include "omnicount/external_segmenter.hpp"
#include "omnicount/overlay.hpp"
#include "omnicount/pipeline.hpp"
#include "omnicount/result_io.hpp"
#include "omnicount/splits.hpp"
#include "omnicount/tensor_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace omnicount;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitIo = 2;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::InvalidArgument:
    case ErrorKind::UnsupportedConfig:
    case ErrorKind::UnknownLabel:
      return kExitConfig;
    default:
      return kExitIo;
  }
}

struct EngineOptions {
  PipelineConfig config;
  float dedupe_iou = 0.0f;  // 0 = off
  bool no_gp = false;
  bool no_rp = false;

  PipelineConfig resolved() const {
    PipelineConfig c = config;
    if (dedupe_iou > 0.0f) c.segment.dedupe_iou = dedupe_iou;
    c.stages.use_geometric = !no_gp;
    c.stages.use_refpoints = !no_rp;
    return c;
  }
};

void add_refine_flags(CLI::App* app, EngineOptions& o) {
  app->add_option("--tau", o.config.refine.tau, "Depth tolerance for mask recovery")
      ->capture_default_str();
  app->add_option("--window", o.config.refine.window_radius,
                  "Chebyshev radius (px) of the recovery search window")
      ->capture_default_str();
  app->add_option("--passes", o.config.refine.max_passes, "Recovery passes")->capture_default_str();
  app->add_flag("--no-gp", o.no_gp, "Disable geometric (depth) mask recovery");
}

void add_point_flags(CLI::App* app, EngineOptions& o) {
  app->add_option("--sigma", o.config.points.sigma, "Gaussian modulation std (heatmap px)")
      ->capture_default_str();
  app->add_option("--omega", o.config.points.omega, "Kernel window; side = 2*floor(omega/2)+1")
      ->capture_default_str();
  app->add_option("--threshold", o.config.points.score_threshold,
                  "Normalized activation threshold for local maxima")
      ->capture_default_str();
}

void add_segment_flags(CLI::App* app, EngineOptions& o) {
  app->add_option("--min-area", o.config.segment.min_area, "Minimum instance area (px^2)")
      ->capture_default_str();
  app->add_option("--flood-tau", o.config.segment.flood_tau,
                  "Reference backend depth tolerance")
      ->capture_default_str();
  app->add_option("--dedupe-iou", o.dedupe_iou, "Drop masks overlapping a kept mask above this IoU (0 = off)")
      ->capture_default_str();
  app->add_flag("--no-rp", o.no_rp, "Replace reference points with a uniform grid over the mask");
}

// Manifest arguments may be files or directories (all *.json inside, sorted).
std::vector<fs::path> expand_manifests(const std::vector<std::string>& args) {
  std::vector<fs::path> out;
  for (const auto& arg : args) {
    const fs::path p(arg);
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& entry : fs::directory_iterator(p)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") {
          found.push_back(entry.path());
        }
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.push_back(p);
    }
  }
  if (out.empty()) throw ConfigError("--manifest: no manifest files found");
  return out;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Writes to the file when a path is given, stdout otherwise.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      if (auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
      file_.open(path, std::ios::trunc);
      if (!file_) throw Error(ErrorKind::IoFailure, "cannot write " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

// ---------------------------------------------------------------------------
// count

struct CountArgs {
  std::vector<std::string> manifests;
  std::string labels;
  std::string backend = "reference";
  std::string exchange_dir = "omnicount_exchange";
  std::string prompt_mode = "auto";
  std::string prompts;
  int jobs = 1;
  std::uint64_t seed = 0;
  bool timings = false;
  bool keep_masks = false;
  std::string out;
  EngineOptions engine;
};

CountRequest make_request(const PriorBundle& bundle, const std::vector<std::string>& wanted,
                          PromptMode mode, const std::map<std::string, AnnotationRecord>& prompts) {
  CountRequest req;
  req.image_id = bundle.image_id;
  req.prompt_mode = mode;
  if (wanted.empty()) {
    req.labels = bundle.class_labels;
  } else {
    for (const auto& label : wanted) {
      if (bundle.class_index(label)) req.labels.push_back(label);
    }
  }
  if (mode != PromptMode::Auto) {
    auto it = prompts.find(bundle.image_id);
    if (it == prompts.end()) {
      throw Error(ErrorKind::MissingGroundTruth, "no prompts for image " + bundle.image_id);
    }
    for (const auto& obj : it->second.objects) {
      if (mode == PromptMode::Points && obj.points) {
        auto& pts = req.manual_points[obj.label];
        for (const auto& p : *obj.points) pts.push_back({p[0], p[1], 1.0f});
      } else if (mode == PromptMode::Boxes && obj.boxes) {
        req.manual_boxes[obj.label] = *obj.boxes;
      }
    }
  }
  return req;
}

int cmd_count(const CountArgs& args) {
  const auto manifests = expand_manifests(args.manifests);
  auto config = args.engine.resolved();
  config.keep_masks = args.keep_masks;
  CountingPipeline pipeline = toggle_stages(config, config.stages);
  const auto wanted = split_csv(args.labels);
  if (args.jobs < 1) throw ConfigError("--jobs must be >= 1");

  PromptMode mode = PromptMode::Auto;
  if (args.prompt_mode == "points") mode = PromptMode::Points;
  if (args.prompt_mode == "boxes") mode = PromptMode::Boxes;
  if ((mode == PromptMode::Auto) != args.prompts.empty()) {
    throw ConfigError("--prompts is required exactly when --prompt-mode is points or boxes");
  }
  std::map<std::string, AnnotationRecord> prompts;
  if (!args.prompts.empty()) {
    for (auto& rec : read_annotations(args.prompts)) prompts[rec.image_id] = std::move(rec);
  }

  ExternalConfig ext;
  if (args.backend == "external") {
    ext = ExternalConfig::from_env();
    if (ext.command.empty()) throw ConfigError("--backend external requires OMNI_SEG_CMD");
  }

  std::vector<std::optional<CountResult>> results(manifests.size());
  std::vector<std::string> errors(manifests.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> label_seen{wanted.empty()};
  auto worker = [&] {
    for (std::size_t i = next++; i < manifests.size(); i = next++) {
      try {
        const auto bundle = load_prior_bundle(manifests[i]);
        auto request = make_request(bundle, wanted, mode, prompts);
        if (!request.labels.empty()) label_seen = true;
        CountResult result;
        result.image_id = bundle.image_id;
        if (!request.labels.empty()) {
          std::unique_ptr<SegmenterBackend> backend;
          if (args.backend == "external") {
            backend = std::make_unique<ExternalBackend>(ext, fs::path(args.exchange_dir) / bundle.image_id);
          } else {
            backend = std::make_unique<ReferenceBackend>(config.segment);
          }
          result = pipeline.count(bundle, request, *backend);
        }
        results[i] = std::move(result);
      } catch (const std::exception& e) {
        errors[i] = manifests[i].string() + ": " + e.what();
      }
    }
  };
  std::vector<std::thread> threads;
  const int n_threads = std::min<int>(args.jobs, static_cast<int>(manifests.size()));
  for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();

  if (!label_seen) throw ConfigError("--labels: none of the requested labels occur in any manifest");

  std::vector<const CountResult*> ordered;
  for (const auto& r : results) {
    if (r) ordered.push_back(&*r);
  }
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const CountResult* a, const CountResult* b) { return a->image_id < b->image_id; });
  Output out(args.out);
  for (const auto* r : ordered) out.stream() << to_json_line(*r, args.timings) << '\n';

  int code = kExitOk;
  for (const auto& e : errors) {
    if (!e.empty()) {
      std::cerr << "error: " << e << '\n';
      code = kExitIo;
    }
  }
  for (const auto* r : ordered) {
    for (const auto& c : r->classes) {
      if (c.error) std::cerr << "warning: " << r->image_id << " [" << c.label << "]: " << *c.error << '\n';
    }
  }
  return code;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string pred;
  std::string gt;
  std::string out;
};

int cmd_eval(const EvalArgs& args) {
  const auto results = read_count_results(args.pred);
  const auto records = read_annotations(args.gt);
  const auto report = evaluate(results, records);
  std::cout << report_to_text(report);
  if (!args.out.empty()) {
    Output out(args.out);
    out.stream() << report_to_json(report) << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// viz

struct VizArgs {
  std::string manifest;
  std::string result;
  std::string out;
  EngineOptions engine;
};

int cmd_viz(const VizArgs& args) {
  const auto bundle = load_prior_bundle(args.manifest);
  std::ifstream in(args.result);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open " + args.result);
  std::optional<CountResult> result;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto r = parse_count_result(line, bundle.height, bundle.width);
      if (r.image_id == bundle.image_id) {
        result = std::move(r);
        break;
      }
    } catch (const Error& e) {
      throw Error(e.kind(), args.result + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!result) {
    throw Error(ErrorKind::MissingGroundTruth, args.result + " has no result for " + bundle.image_id);
  }
  const auto config = args.engine.resolved();
  RefinedPriors refined;
  if (config.stages.use_geometric) {
    refined = refine_masks(bundle, config.refine);
  } else {
    refined.refined_masks = bundle.semantic_masks;
  }
  write_png(render_overlay(bundle, refined, *result), args.out);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// refine / points

struct StageArgs {
  std::vector<std::string> manifests;
  std::string out;
  EngineOptions engine;
};

int cmd_refine(const StageArgs& args) {
  const auto config = args.engine.resolved();
  fs::create_directories(args.out);
  json summary = json::array();
  for (const auto& path : expand_manifests(args.manifests)) {
    const auto bundle = load_prior_bundle(path);
    const auto refined = refine_masks(bundle, config.refine);
    for (std::size_t j = 0; j < bundle.class_labels.size(); ++j) {
      const auto file = bundle.image_id + "_refined_" + std::to_string(j) + ".ocpt";
      write_tensor_file(refined.refined_masks[j], fs::path(args.out) / file);
      const float mu = refined.mean_depths[j];
      summary.push_back({{"image_id", bundle.image_id},
                         {"class", bundle.class_labels[j]},
                         {"mask", file},
                         {"mean_depth", std::isnan(mu) ? json(nullptr) : json(mu)},
                         {"added_pixels", refined.added_pixel_count[j]}});
    }
  }
  std::ofstream out(fs::path(args.out) / "refine_summary.json", std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write refine_summary.json");
  out << summary.dump(2) << '\n';
  return kExitOk;
}

int cmd_points(const StageArgs& args) {
  const auto config = args.engine.resolved();
  json points = json::array();
  for (const auto& path : expand_manifests(args.manifests)) {
    const auto bundle = load_prior_bundle(path);
    RefinedPriors refined;
    if (config.stages.use_geometric) {
      refined = refine_masks(bundle, config.refine);
    } else {
      refined.refined_masks = bundle.semantic_masks;
    }
    const auto per_class = select_reference_points(bundle, refined, config.points);
    for (std::size_t m = 0; m < per_class.size(); ++m) {
      for (const auto& p : per_class[m]) {
        points.push_back({{"image_id", bundle.image_id},
                          {"class", bundle.class_labels[m]},
                          {"y", p.y},
                          {"x", p.x},
                          {"score", p.score}});
      }
    }
  }
  Output out(args.out);
  out.stream() << points.dump(2) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------
// split

struct SplitArgs {
  std::string annotations;
  std::string mode = "zero-shot";
  double ratio = 0.6;
  int shots = 1;
  std::uint64_t seed = 0;
  std::string exclude_domains;
  std::string out;
};

int cmd_split(const SplitArgs& args) {
  const auto records = read_annotations(args.annotations);
  json doc;
  doc["mode"] = args.mode;
  doc["seed"] = args.seed;
  if (args.mode == "zero-shot") {
    const auto excluded = split_csv(args.exclude_domains);
    const auto split = generate_zero_shot_split(records, args.ratio, args.seed,
                                                {excluded.begin(), excluded.end()});
    doc["ratio"] = args.ratio;
    doc["train_classes"] = split.train_classes;
    doc["test_classes"] = split.test_classes;
  } else {
    const auto split = generate_few_shot_split(records, args.shots, args.seed);
    doc["shots"] = args.shots;
    doc["train_images"] = split.train_images;
    doc["test_images"] = split.test_images;
  }
  Output out(args.out);
  out.stream() << doc.dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"omnicount: training-free multi-label object counting from semantic, activation "
               "and depth priors"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  CountArgs count_args;
  auto* count = app.add_subcommand("count", "Count objects per class for one or more images");
  count->add_option("-m,--manifest", count_args.manifests, "Manifest file(s) or directories")
      ->required()
      ->check(CLI::ExistingPath);
  count->add_option("--labels", count_args.labels, "Comma-separated class labels to count");
  count->add_option("--backend", count_args.backend, "Segmenter backend")
      ->check(CLI::IsMember({"reference", "external"}))
      ->capture_default_str();
  count->add_option("--exchange-dir", count_args.exchange_dir,
                    "Exchange directory root for the external backend")
      ->capture_default_str();
  count->add_option("--prompt-mode", count_args.prompt_mode, "Prompt source")
      ->check(CLI::IsMember({"auto", "points", "boxes"}))
      ->capture_default_str();
  count->add_option("--prompts", count_args.prompts,
                    "Annotation JSONL supplying manual points/boxes")
      ->check(CLI::ExistingFile);
  count->add_option("--jobs", count_args.jobs, "Images processed in parallel")->capture_default_str();
  count->add_option("--seed", count_args.seed, "Seed (recorded; counting is deterministic)")
      ->capture_default_str();
  count->add_flag("--timings", count_args.timings, "Include per-stage timings in the output");
  count->add_flag("--keep-masks", count_args.keep_masks,
                  "Write run-length encoded instance masks (needed by viz outlines)");
  count->add_option("--out", count_args.out, "Output JSONL (default stdout)");
  add_refine_flags(count, count_args.engine);
  add_point_flags(count, count_args.engine);
  add_segment_flags(count, count_args.engine);

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Score predictions against annotations");
  eval->add_option("--pred", eval_args.pred, "Prediction JSONL from `count`")->required();
  eval->add_option("--gt", eval_args.gt, "Annotation JSONL")->required();
  eval->add_option("--out", eval_args.out, "Also write the report as JSON");

  VizArgs viz_args;
  auto* viz = app.add_subcommand("viz", "Render an overlay PNG for one image");
  viz->add_option("-m,--manifest", viz_args.manifest, "Manifest file")->required()->check(CLI::ExistingFile);
  viz->add_option("--result", viz_args.result, "Result JSONL from `count`")->required();
  viz->add_option("--out", viz_args.out, "Output PNG")->required();
  add_refine_flags(viz, viz_args.engine);

  StageArgs refine_args;
  auto* refine = app.add_subcommand("refine", "Write depth-refined semantic masks");
  refine->add_option("-m,--manifest", refine_args.manifests, "Manifest file(s) or directories")
      ->required()
      ->check(CLI::ExistingPath);
  refine->add_option("--out", refine_args.out, "Output directory")->required();
  add_refine_flags(refine, refine_args.engine);

  StageArgs points_args;
  auto* points = app.add_subcommand("points", "Emit gated reference points as JSON");
  points->add_option("-m,--manifest", points_args.manifests, "Manifest file(s) or directories")
      ->required()
      ->check(CLI::ExistingPath);
  points->add_option("--out", points_args.out, "Output JSON (default stdout)");
  add_refine_flags(points, points_args.engine);
  add_point_flags(points, points_args.engine);

  SplitArgs split_args;
  auto* split = app.add_subcommand("split", "Generate zero-shot or few-shot splits");
  split->add_option("--annotations", split_args.annotations, "Annotation JSONL")->required();
  split->add_option("--mode", split_args.mode, "Split kind")
      ->check(CLI::IsMember({"zero-shot", "few-shot"}))
      ->capture_default_str();
  split->add_option("--ratio", split_args.ratio, "Train class fraction (zero-shot)")->capture_default_str();
  split->add_option("--shots", split_args.shots, "Train images per class (few-shot)")
      ->check(CLI::Range(1, 5))
      ->capture_default_str();
  split->add_option("--seed", split_args.seed, "Shuffle seed")->capture_default_str();
  split->add_option("--exclude-domains", split_args.exclude_domains,
                    "Comma-separated domains reserved for test (zero-shot)");
  split->add_option("--out", split_args.out, "Output JSON (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*count) return cmd_count(count_args);
    if (*eval) return cmd_eval(eval_args);
    if (*viz) return cmd_viz(viz_args);
    if (*refine) return cmd_refine(refine_args);
    if (*points) return cmd_points(points_args);
    if (*split) return cmd_split(split_args);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitConfig;
}
