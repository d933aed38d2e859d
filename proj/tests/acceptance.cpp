// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <bit>
#include <functional>
#include <random>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "omnicount/evaluate.hpp"
#include "omnicount/external_segmenter.hpp"
#include "omnicount/metrics.hpp"
#include "omnicount/pipeline.hpp"
#include "omnicount/result_io.hpp"
#include "omnicount/splits.hpp"
#include "omnicount/tensor_io.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"
#include "temp_dir.hpp"

using namespace omnicount;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& check) {
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  std::printf("%s  %-34s %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
  std::fflush(stdout);
  failures += !o.pass;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, a, b, c, d);
  return buf;
}

// Random instance: up to 3 classes seeded with disjoint pixels on a grid of at
// most 16x16, depth uniform in [0, 1].
struct RefineInstance {
  std::vector<Mask> masks;
  FloatGrid depth;
  RefineParams params;
};

RefineInstance random_refine_instance(std::mt19937_64& rng) {
  const int h = 1 + static_cast<int>(rng() % 16);
  const int w = 1 + static_cast<int>(rng() % 16);
  const std::size_t n = 1 + rng() % 3;
  RefineInstance inst{std::vector<Mask>(n, Mask(h, w)), FloatGrid(h, w), {}};
  const auto density = 2 + rng() % 10;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto r = rng() % (density * n);
      if (r < n) inst.masks[r](y, x) = 1;
    }
  }
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (auto& v : inst.depth.data()) v = u(rng);
  static const float taus[] = {0.1f, 0.3f, 0.5f};
  inst.params.tau = taus[rng() % 3];
  inst.params.window_radius = 1 + static_cast<int>(rng() % 2);
  inst.params.max_passes = 1 + static_cast<int>(rng() % 3);
  return inst;
}

Outcome refine_oracle() {
  std::mt19937_64 rng(1001);
  std::vector<RefineInstance> cases;
  for (int i = 0; i < 200; ++i) cases.push_back(random_refine_instance(rng));
  int mismatches = 0;
  double lib_time = 0;
  for (const auto& c : cases) {
    const auto t0 = Clock::now();
    const auto got = refine_masks(c.masks, c.depth, c.params).refined_masks;
    lib_time += seconds_since(t0);
    const auto want = testing::brute_force_refine(c.masks, c.depth, c.params.tau,
                                                  c.params.window_radius, c.params.max_passes);
    mismatches += got != want;
  }
  return {mismatches == 0 && lib_time < 2.0,
          fmt("200 instances, %.0f mismatches, %.3f s", mismatches, lib_time)};
}

Outcome refine_invariants() {
  std::mt19937_64 rng(1002);
  int violations = 0;
  std::string first;
  for (int i = 0; i < 500; ++i) {
    const auto c = random_refine_instance(rng);
    const auto v = testing::refine_invariant_violation(c.masks, c.depth, c.params);
    if (!v.empty()) {
      if (first.empty()) first = " first: " + v;
      ++violations;
    }
  }
  return {violations == 0, fmt("500 instances, %.0f violations", violations) + first};
}

Outcome maxima_oracle() {
  std::mt19937_64 rng(1003);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  int mismatches = 0;
  for (int i = 0; i < 500; ++i) {
    FloatGrid g(16, 16);
    // Mix of white noise and smooth bump fields.
    if (i % 2 == 0) {
      for (auto& v : g.data()) v = u(rng);
    } else {
      std::vector<testing::Bump> bumps;
      for (int b = 0; b < 6; ++b) bumps.push_back({u(rng) * 15, u(rng) * 15, 0.8f + u(rng) * 2});
      g = testing::gaussian_field(16, 16, bumps, 0.01f, rng);
    }
    const float thr = u(rng);
    std::vector<std::pair<int, int>> got;
    for (const auto& p : find_local_maxima(g, thr)) {
      got.emplace_back(static_cast<int>(p.y), static_cast<int>(p.x));
    }
    mismatches += got != testing::brute_force_maxima(g, thr);
  }
  return {mismatches == 0, fmt("500 heatmaps, %.0f mismatches", mismatches)};
}

Outcome subpixel() {
  std::mt19937_64 rng(1004);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  double err_y = 0, err_x = 0;
  int better = 0, n = 0;
  double lib_time = 0;
  for (int i = 0; i < 100; ++i) {
    const float cy = 4.0f + 8.0f * u(rng);
    const float cx = 4.0f + 8.0f * u(rng);
    const float sd = 0.8f + 1.2f * u(rng);
    const auto g = testing::gaussian_field(16, 16, {{cy, cx, sd}}, 0.0f, rng);
    const auto t0 = Clock::now();
    const auto peaks = find_local_maxima(g, 0.5f);
    if (peaks.size() != 1) return {false, "expected one peak per Gaussian"};
    const auto refined = gaussian_refine(g, peaks, PointParams{});
    lib_time += seconds_since(t0);
    err_y += std::fabs(refined[0].y - cy);
    err_x += std::fabs(refined[0].x - cx);
    const double e_ref = std::hypot(refined[0].y - cy, refined[0].x - cx);
    const double e_arg = std::hypot(peaks[0].y - cy, peaks[0].x - cx);
    better += e_ref < e_arg;
    ++n;
  }
  err_y /= n;
  err_x /= n;
  return {err_y <= 0.15 && err_x <= 0.15 && better >= 90 && lib_time < 1.0,
          fmt("mean err y %.4f x %.4f px, refined better in %.0f/100, %.3f s", err_y, err_x,
              better, lib_time)};
}

struct SuiteRun {
  EvalTable table;
  EvalTable occluded;
  int exact = 0;
  int pairs = 0;
};

testing::Scene suite_scene(int i) {
  testing::SceneOptions opt;
  opt.occluded = i % 2 == 1;
  return testing::generate_scene(5000 + static_cast<std::uint64_t>(i), opt);
}

SuiteRun run_suite(const std::vector<testing::Scene>& scenes, StageToggles toggles,
                   bool occluded_only) {
  const ReferenceBackend backend(SegmentParams{});
  const auto pipeline = toggle_stages(PipelineConfig{}, toggles);
  SuiteRun run;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const bool occluded = i % 2 == 1;
    if (occluded_only && !occluded) continue;
    const auto& s = scenes[i];
    CountRequest req;
    req.labels = s.bundle.class_labels;
    const auto res = pipeline.count(s.bundle, req, backend);
    for (std::size_t c = 0; c < res.classes.size(); ++c) {
      const EvalRow row{s.bundle.image_id, res.classes[c].label, s.gt_counts[c],
                        static_cast<long>(res.classes[c].count)};
      run.table.add(row);
      if (occluded) run.occluded.add(row);
      run.exact += row.gt_count == row.pred_count;
      ++run.pairs;
    }
  }
  return run;
}

std::vector<testing::Scene> suite;

Outcome end_to_end() {
  for (int i = 0; i < 100; ++i) suite.push_back(suite_scene(i));
  const auto t0 = Clock::now();
  const auto run = run_suite(suite, StageToggles{}, false);
  const double elapsed = seconds_since(t0);
  const double frac = static_cast<double>(run.exact) / run.pairs;
  const double m = mrmse(run.table, false);
  return {frac >= 0.95 && m <= 0.5 && elapsed < 30.0,
          fmt("exact %.0f/%.0f pairs, mRMSE %.4f, %.2f s", run.exact, run.pairs, m, elapsed)};
}

Outcome ablation() {
  const double full = mrmse(run_suite(suite, {true, true, true}, true).occluded, false);
  const double no_gp = mrmse(run_suite(suite, {true, false, true}, true).occluded, false);
  const double no_rp = mrmse(run_suite(suite, {true, true, false}, true).occluded, false);
  return {no_gp > full && no_rp > full,
          fmt("occluded mRMSE full %.4f, GP off %.4f, RP off %.4f", full, no_gp, no_rp)};
}

Outcome metric_fixtures() {
  int bad = 0;
  auto near = [&](double got, double want, double tol) { bad += !(std::fabs(got - want) <= tol); };

  EvalTable a;
  a.add({"i0", "a", 1, 3});
  a.add({"i1", "a", 5, 5});
  near(mae(a), 1.0, 1e-9);
  near(rmse(a), std::sqrt(2.0), 1e-9);
  EvalTable b;
  b.add({"i0", "a", 4, 2});
  near(nae(b), 0.5, 1e-9);
  near(sre(b), 1.0, 1e-9);
  EvalTable c;
  c.add({"i0", "A", 2, 3});
  c.add({"i1", "A", 0, 0});
  c.add({"i2", "B", 4, 4});
  near(mrmse(c, false), std::sqrt(0.5) / 2.0, 1e-9);
  near(mrmse(c, true), 0.5, 1e-9);

  // Committed fixture computed with exact rational arithmetic.
  const auto report = evaluate(read_count_results(FIXTURE_DIR "/eval_pred.jsonl"),
                               read_annotations(FIXTURE_DIR "/eval_gt.jsonl"));
  std::ifstream in(FIXTURE_DIR "/eval_expected.json");
  const auto want = nlohmann::json::parse(in)["overall"];
  near(report.overall.mae, want["mae"], 1e-9);
  near(report.overall.rmse, want["rmse"], 1e-9);
  near(report.overall.nae.value_or(-1), want["nae"], 1e-9);
  near(report.overall.sre.value_or(-1), want["sre"], 1e-9);
  near(report.overall.mrmse, want["mrmse"], 1e-9);
  near(report.overall.mrmse_nz.value_or(-1), want["mrmse_nz"], 1e-9);

  std::mt19937_64 rng(1007);
  int jensen = 0, single = 0;
  for (int t = 0; t < 1000; ++t) {
    EvalTable r, one;
    const int n = 1 + static_cast<int>(rng() % 50);
    for (int i = 0; i < n; ++i) {
      const long g = static_cast<long>(rng() % 30);
      const long p = static_cast<long>(rng() % 30);
      r.add({"i" + std::to_string(i), "c" + std::to_string(rng() % 4), g, p});
      one.add({"i" + std::to_string(i), "only", g, p});
    }
    jensen += !(mae(r) <= rmse(r) + 1e-12);
    const double e = rmse(one);
    single += !(std::fabs(mrmse(one, false) - e) <= 1e-12 * std::max(e, 1e-300));
  }
  return {bad == 0 && jensen == 0 && single == 0,
          fmt("fixture misses %.0f, MAE>RMSE %.0f/1000, single-category mismatches %.0f/1000", bad,
              jensen, single)};
}

template <typename T>
T random_grid(std::mt19937_64& rng, int h, int w, int c) {
  T g = [&] {
    if constexpr (requires(const T& x) { x.channels(); }) {
      return T(h, w, c);
    } else {
      return T(h, w);
    }
  }();
  for (auto& v : g.data()) {
    if constexpr (std::is_same_v<typename T::value_type, float>) {
      v = std::bit_cast<float>(static_cast<std::uint32_t>(rng() & 0x7f7fffffu));
    } else {
      v = static_cast<std::uint8_t>(rng());
    }
  }
  return g;
}

Outcome protocol() {
  std::mt19937_64 rng(1008);
  int round_trip_bad = 0;
  for (int i = 0; i < 200; ++i) {
    const int h = 1 + static_cast<int>(rng() % 24);
    const int w = 1 + static_cast<int>(rng() % 24);
    const int c = 1 + static_cast<int>(rng() % 4);
    AnyTensor t;
    switch (i % 4) {
      case 0: t = random_grid<Grid2D<std::uint8_t>>(rng, h, w, c); break;
      case 1: t = random_grid<Grid2D<float>>(rng, h, w, c); break;
      case 2: t = random_grid<Grid3D<std::uint8_t>>(rng, h, w, c); break;
      default: t = random_grid<Grid3D<float>>(rng, h, w, c); break;
    }
    const auto bytes = encode_tensor(t);
    const auto back = decode_tensor(bytes);
    round_trip_bad += !(back == t) || encode_tensor(back) != bytes;
  }

  // Exchange loopback through the stub segmenter process.
  testing::TempDir tmp("acceptance_exchange");
  int loop_bad = 0, loop_pairs = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    testing::SceneOptions opt;
    opt.with_rgb = true;
    opt.max_instances = 12;
    const auto s = testing::generate_scene(7000 + seed, opt);
    const ExternalBackend backend({std::string(SEG_STUB_PATH) + " flood", std::chrono::seconds(30)},
                                  tmp / s.bundle.image_id);
    CountRequest req;
    req.labels = s.bundle.class_labels;
    const auto res = count_image(s.bundle, req, PipelineConfig{}, backend);
    for (std::size_t c = 0; c < res.classes.size(); ++c) {
      loop_bad += res.classes[c].error.has_value() ||
                  res.classes[c].count != static_cast<std::size_t>(s.gt_counts[c]);
      ++loop_pairs;
    }
  }

  // Splits: determinism and disjointness over 50 seeds.
  std::vector<AnnotationRecord> recs;
  for (int i = 0; i < 120; ++i) {
    AnnotationRecord r;
    r.image_id = "img" + std::to_string(i);
    r.domain = i % 5 == 0 ? "satellite" : "retail";
    for (int c = 0; c < 40; ++c) {
      if (c == i % 40 || rng() % 6 == 0) r.objects.push_back({"cls" + std::to_string(c), 1 + static_cast<long>(rng() % 4), {}, {}});
    }
    recs.push_back(std::move(r));
  }
  int split_bad = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto z1 = generate_zero_shot_split(recs, 0.6, seed);
    const auto z2 = generate_zero_shot_split(recs, 0.6, seed);
    std::set<std::string> train(z1.train_classes.begin(), z1.train_classes.end());
    for (const auto& cls : z1.test_classes) split_bad += train.count(cls);
    split_bad += z1.train_classes != z2.train_classes || z1.test_classes != z2.test_classes;
    const auto f1 = generate_few_shot_split(recs, 1 + static_cast<int>(seed % 5), seed);
    const auto f2 = generate_few_shot_split(recs, 1 + static_cast<int>(seed % 5), seed);
    std::set<std::string> train_imgs;
    for (const auto& [label, imgs] : f1.train_images) train_imgs.insert(imgs.begin(), imgs.end());
    for (const auto& img : f1.test_images) split_bad += train_imgs.count(img);
    split_bad += f1.train_images != f2.train_images || f1.test_images != f2.test_images;
  }

  return {round_trip_bad == 0 && loop_bad == 0 && split_bad == 0,
          fmt("round trip bad %.0f/200, loopback wrong %.0f/%.0f, split defects %.0f", round_trip_bad,
              loop_bad, loop_pairs, split_bad)};
}

}  // namespace

int main() {
  report("refinement oracle equivalence", refine_oracle);
  report("refinement invariants", refine_invariants);
  report("local maxima oracle equivalence", maxima_oracle);
  report("sub-pixel accuracy", subpixel);
  report("end-to-end synthetic counting", end_to_end);
  report("ablation direction", ablation);
  report("metric fixtures", metric_fixtures);
  report("format and protocol", protocol);
  std::printf("%d failed\n", failures);
  return failures == 0 ? 0 : 1;
}
