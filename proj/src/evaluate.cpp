#include "omnicount/evaluate.hpp"

#include <cstdio>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace omnicount {
namespace {

using nlohmann::json;

std::optional<double> defined_or_empty(double (*metric)(const EvalTable&), const EvalTable& t) {
  try {
    return metric(t);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::AllZeroGroundTruth) return std::nullopt;
    throw;
  }
}

json metric_json(const MetricSet& m) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return json{{"n_rows", m.n_rows}, {"mae", m.mae},     {"rmse", m.rmse},
              {"nae", opt(m.nae)},  {"sre", opt(m.sre)}, {"mrmse", m.mrmse},
              {"mrmse_nz", opt(m.mrmse_nz)}};
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string("-"); }

}  // namespace

MetricSet compute_metrics(const EvalTable& table) {
  MetricSet m;
  m.n_rows = table.rows().size();
  m.mae = mae(table);
  m.rmse = rmse(table);
  m.nae = defined_or_empty(&nae, table);
  m.sre = defined_or_empty(&sre, table);
  m.mrmse = mrmse(table, false);
  try {
    m.mrmse_nz = mrmse(table, true);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::EmptyTable) throw;
  }
  return m;
}

EvalTable build_table(const std::vector<CountResult>& results,
                      const std::vector<AnnotationRecord>& records) {
  std::unordered_map<std::string, const AnnotationRecord*> by_id;
  for (const auto& rec : records) by_id[rec.image_id] = &rec;
  EvalTable table;
  for (const auto& res : results) {
    auto it = by_id.find(res.image_id);
    if (it == by_id.end()) {
      throw Error(ErrorKind::MissingGroundTruth, "no annotation for image " + res.image_id);
    }
    for (const auto& c : res.classes) {
      if (c.error) continue;
      const auto* gt = it->second->find(c.label);
      table.add({res.image_id, c.label, gt ? gt->gt_count : 0, static_cast<long>(c.count)});
    }
  }
  return table;
}

EvalReport evaluate(const std::vector<CountResult>& results,
                    const std::vector<AnnotationRecord>& records) {
  const EvalTable table = build_table(results, records);
  EvalReport report;
  for (const auto& res : results) {
    for (const auto& c : res.classes) report.n_failed += c.error.has_value();
  }
  report.overall = compute_metrics(table);

  std::unordered_map<std::string, std::string> domain_of;
  for (const auto& rec : records) domain_of[rec.image_id] = rec.domain;
  std::map<std::string, EvalTable> by_domain;
  std::map<std::string, EvalTable> by_class;
  for (const auto& row : table.rows()) {
    by_domain[domain_of[row.image_id]].add(row);
    by_class[row.label].add(row);
  }
  for (const auto& [domain, t] : by_domain) report.per_domain[domain] = compute_metrics(t);
  for (const auto& [label, t] : by_class) {
    report.per_class.push_back({label, t.rows().size(), mae(t), rmse(t)});
  }
  return report;
}

std::string report_to_json(const EvalReport& report) {
  json doc;
  doc["overall"] = metric_json(report.overall);
  doc["per_domain"] = json::object();
  for (const auto& [domain, m] : report.per_domain) doc["per_domain"][domain] = metric_json(m);
  doc["per_class"] = json::array();
  for (const auto& c : report.per_class) {
    doc["per_class"].push_back({{"label", c.label}, {"n_rows", c.n_rows}, {"mae", c.mae},
                                {"rmse", c.rmse}});
  }
  doc["n_failed"] = report.n_failed;
  return doc.dump(2);
}

std::string report_to_text(const EvalReport& report) {
  std::ostringstream out;
  char line[256];
  auto row = [&](const std::string& name, const MetricSet& m) {
    std::snprintf(line, sizeof(line), "%-20s %6zu %9s %9s %9s %9s %9s %9s\n", name.c_str(),
                  m.n_rows, fmt(m.mae).c_str(), fmt(m.rmse).c_str(), fmt(m.nae).c_str(),
                  fmt(m.sre).c_str(), fmt(m.mrmse).c_str(), fmt(m.mrmse_nz).c_str());
    out << line;
  };
  std::snprintf(line, sizeof(line), "%-20s %6s %9s %9s %9s %9s %9s %9s\n", "scope", "rows", "MAE",
                "RMSE", "NAE", "SRE", "mRMSE", "mRMSE-nz");
  out << line;
  row("overall", report.overall);
  for (const auto& [domain, m] : report.per_domain) {
    row("domain:" + (domain.empty() ? std::string("(none)") : domain), m);
  }
  out << '\n';
  std::snprintf(line, sizeof(line), "%-20s %6s %9s %9s\n", "class", "rows", "MAE", "RMSE");
  out << line;
  for (const auto& c : report.per_class) {
    std::snprintf(line, sizeof(line), "%-20s %6zu %9s %9s\n", c.label.c_str(), c.n_rows,
                  fmt(c.mae).c_str(), fmt(c.rmse).c_str());
    out << line;
  }
  if (report.n_failed > 0) out << "\nskipped " << report.n_failed << " failed class entries\n";
  return out.str();
}

}  // namespace omnicount
