#include "omnicount/metrics.hpp"

#include <cmath>
#include <map>
#include <utility>

namespace omnicount {
namespace {

void require_rows(const EvalTable& table) {
  if (table.empty()) throw Error(ErrorKind::EmptyTable, "evaluation table has no rows");
}

double diff(const EvalRow& r) { return static_cast<double>(r.gt_count - r.pred_count); }

}  // namespace

void EvalTable::add(EvalRow row) {
  if (!keys_.emplace(row.image_id, row.label).second) {
    throw Error(ErrorKind::InvalidArgument,
                "duplicate row (" + row.image_id + ", " + row.label + ")");
  }
  rows_.push_back(std::move(row));
}

double mae(const EvalTable& table) {
  require_rows(table);
  double sum = 0.0;
  for (const auto& r : table.rows()) sum += std::fabs(diff(r));
  return sum / static_cast<double>(table.rows().size());
}

double rmse(const EvalTable& table) {
  require_rows(table);
  double sum = 0.0;
  for (const auto& r : table.rows()) sum += diff(r) * diff(r);
  return std::sqrt(sum / static_cast<double>(table.rows().size()));
}

double nae(const EvalTable& table) {
  require_rows(table);
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : table.rows()) {
    if (r.gt_count <= 0) continue;
    sum += std::fabs(diff(r)) / static_cast<double>(r.gt_count);
    ++n;
  }
  if (n == 0) throw Error(ErrorKind::AllZeroGroundTruth, "NAE needs a row with c > 0");
  return sum / static_cast<double>(n);
}

double sre(const EvalTable& table) {
  require_rows(table);
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : table.rows()) {
    if (r.gt_count <= 0) continue;
    sum += diff(r) * diff(r) / static_cast<double>(r.gt_count);
    ++n;
  }
  if (n == 0) throw Error(ErrorKind::AllZeroGroundTruth, "SRE needs a row with c > 0");
  return std::sqrt(sum / static_cast<double>(n));
}

double mrmse(const EvalTable& table, bool nonzero_only) {
  require_rows(table);
  std::map<std::string, std::pair<double, std::size_t>> per_label;
  for (const auto& r : table.rows()) {
    if (nonzero_only && r.gt_count <= 0) continue;
    auto& [sum, n] = per_label[r.label];
    sum += diff(r) * diff(r);
    ++n;
  }
  if (per_label.empty()) {
    throw Error(ErrorKind::EmptyTable, "no category has a contributing row");
  }
  double total = 0.0;
  for (const auto& [label, acc] : per_label) {
    total += std::sqrt(acc.first / static_cast<double>(acc.second));
  }
  return total / static_cast<double>(per_label.size());
}

}  // namespace omnicount
