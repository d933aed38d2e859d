#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "omnicount/error.hpp"

namespace omnicount {

struct EvalRow {
  std::string image_id;
  std::string label;
  long gt_count = 0;
  long pred_count = 0;
};

class EvalTable {
 public:
  // Throws InvalidArgument on a duplicate (image_id, label).
  void add(EvalRow row);
  const std::vector<EvalRow>& rows() const { return rows_; }
  bool empty() const { return rows_.empty(); }

 private:
  std::vector<EvalRow> rows_;
  std::set<std::pair<std::string, std::string>> keys_;
};

// MAE = mean |c - c_hat|, RMSE = sqrt(mean (c - c_hat)^2).
double mae(const EvalTable& table);
double rmse(const EvalTable& table);
// NAE = mean |c - c_hat| / c, SRE = sqrt(mean (c - c_hat)^2 / c); only rows
// with c > 0 contribute (AllZeroGroundTruth when none do).
double nae(const EvalTable& table);
double sre(const EvalTable& table);
// RMSE per label, averaged uniformly over labels with at least one
// contributing row. nonzero_only restricts each label to rows with c > 0.
double mrmse(const EvalTable& table, bool nonzero_only);

}  // namespace omnicount
