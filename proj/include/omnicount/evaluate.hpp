#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "omnicount/annotations.hpp"
#include "omnicount/metrics.hpp"

namespace omnicount {

struct MetricSet {
  std::size_t n_rows = 0;
  double mae = 0.0;
  double rmse = 0.0;
  std::optional<double> nae;  // undefined when every ground truth is zero
  std::optional<double> sre;
  double mrmse = 0.0;
  std::optional<double> mrmse_nz;
};

struct ClassRow {
  std::string label;
  std::size_t n_rows = 0;
  double mae = 0.0;
  double rmse = 0.0;
};

struct EvalReport {
  MetricSet overall;
  std::map<std::string, MetricSet> per_domain;
  std::vector<ClassRow> per_class;  // sorted by label
  std::size_t n_failed = 0;         // class entries skipped because they carry an error
};

MetricSet compute_metrics(const EvalTable& table);

// Builds (image_id, label, gt, pred) rows from the results. A label absent
// from a known image's record counts as ground truth 0; an unknown image
// raises MissingGroundTruth.
EvalTable build_table(const std::vector<CountResult>& results,
                      const std::vector<AnnotationRecord>& records);

EvalReport evaluate(const std::vector<CountResult>& results,
                    const std::vector<AnnotationRecord>& records);

std::string report_to_json(const EvalReport& report);
std::string report_to_text(const EvalReport& report);

}  // namespace omnicount
