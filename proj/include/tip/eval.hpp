#pragma once

// Binary-classifier evaluation: confusion matrix, scalar metrics (accuracy,
// precision, recall, F1, lift), ROC/AUC and precision-recall curves.
//
// Lift is accuracy minus the prevalence of zeros in the evaluation labels —
// the gain over always predicting the majority "no citation" class.
// Undefined metrics are reported as absent, never as zero.

#include <algorithm>
#include <cstddef>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tip/errors.hpp"

namespace tip {

struct ConfusionMatrix {
  long long tn = 0, fp = 0, fn = 0, tp = 0;
  long long total() const { return tn + fp + fn + tp; }
  bool operator==(const ConfusionMatrix&) const = default;
};

inline ConfusionMatrix confusion(const std::vector<int>& labels,
                                 const std::vector<int>& predicted) {
  if (labels.size() != predicted.size())
    throw LengthMismatch("confusion: label and prediction lengths differ");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1)
      (predicted[i] == 1 ? cm.tp : cm.fn) += 1;
    else
      (predicted[i] == 1 ? cm.fp : cm.tn) += 1;
  }
  return cm;
}

struct CmMetrics {
  double accuracy = 0.0;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  double lift = 0.0;
};

inline CmMetrics metrics_from_cm(const ConfusionMatrix& cm, double zero_prevalence) {
  if (cm.total() < 1) throw EmptyInput("metrics: empty confusion matrix");
  CmMetrics m;
  m.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
  if (cm.tp + cm.fp > 0)
    m.precision = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp);
  if (cm.tp + cm.fn > 0)
    m.recall = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
  if (m.precision && m.recall && (*m.precision + *m.recall) > 0.0)
    m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
  m.lift = m.accuracy - zero_prevalence;
  return m;
}

namespace eval_detail {

/// Indices ordered by score descending; equal scores stay grouped.
inline std::vector<std::size_t> score_order(const std::vector<double>& scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&scores](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

}  // namespace eval_detail

struct RocResult {
  double auc = 0.0;
  std::vector<std::pair<double, double>> points;  // (fpr, tpr), from (0,0) to (1,1)
};

/// Threshold sweep over distinct scores descending; AUC by the trapezoidal
/// rule, which equals the Mann-Whitney statistic with half credit for ties.
inline RocResult roc_auc(const std::vector<int>& labels, const std::vector<double>& scores) {
  if (labels.size() != scores.size())
    throw LengthMismatch("roc_auc: label and score lengths differ");
  long long pos = 0, neg = 0;
  for (const int y : labels) (y == 1 ? pos : neg) += 1;
  if (pos == 0 || neg == 0) throw SingleClassError("roc_auc: both classes required");

  const auto order = eval_detail::score_order(scores);
  RocResult out;
  out.points.emplace_back(0.0, 0.0);
  long long tp = 0, fp = 0, tp_prev = 0, fp_prev = 0;
  double area2 = 0.0;  // twice the area, in count units
  std::size_t i = 0;
  while (i < order.size()) {
    const double threshold = scores[order[i]];
    while (i < order.size() && scores[order[i]] == threshold) {
      (labels[order[i]] == 1 ? tp : fp) += 1;
      ++i;
    }
    area2 += static_cast<double>(fp - fp_prev) * static_cast<double>(tp + tp_prev);
    out.points.emplace_back(static_cast<double>(fp) / static_cast<double>(neg),
                            static_cast<double>(tp) / static_cast<double>(pos));
    tp_prev = tp;
    fp_prev = fp;
  }
  out.auc = area2 / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
  return out;
}

/// (recall, precision) at each distinct threshold descending; the sweep stops
/// once recall reaches 1.0.
inline std::vector<std::pair<double, double>> pr_curve(const std::vector<int>& labels,
                                                       const std::vector<double>& scores) {
  if (labels.size() != scores.size())
    throw LengthMismatch("pr_curve: label and score lengths differ");
  long long pos = 0;
  for (const int y : labels) pos += y == 1;
  if (pos == 0) throw NoPositives("pr_curve: at least one positive required");

  const auto order = eval_detail::score_order(scores);
  std::vector<std::pair<double, double>> points;
  long long tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double threshold = scores[order[i]];
    while (i < order.size() && scores[order[i]] == threshold) {
      (labels[order[i]] == 1 ? tp : fp) += 1;
      ++i;
    }
    points.emplace_back(static_cast<double>(tp) / static_cast<double>(pos),
                        static_cast<double>(tp) / static_cast<double>(tp + fp));
    if (tp == pos) break;
  }
  return points;
}

struct EvalReport {
  ConfusionMatrix cm;
  CmMetrics metrics;
  double auc_roc = 0.0;
  std::vector<std::pair<double, double>> roc_points;
  std::vector<std::pair<double, double>> pr_points;
  double zero_prevalence = 0.0;
};

/// Full evaluation of scores against labels at the given decision threshold.
/// zero_prevalence is measured on these labels.
inline EvalReport evaluate(const std::vector<int>& labels, const std::vector<double>& scores,
                           double threshold = 0.5) {
  if (labels.size() != scores.size())
    throw LengthMismatch("evaluate: label and score lengths differ");
  if (labels.empty()) throw EmptyInput("evaluate: no labels");
  EvalReport report;
  std::vector<int> predicted;
  predicted.reserve(scores.size());
  for (const double s : scores) predicted.push_back(s >= threshold ? 1 : 0);
  report.cm = confusion(labels, predicted);
  long long zeros = 0;
  for (const int y : labels) zeros += y == 0;
  report.zero_prevalence = static_cast<double>(zeros) / static_cast<double>(labels.size());
  report.metrics = metrics_from_cm(report.cm, report.zero_prevalence);
  const auto roc = roc_auc(labels, scores);
  report.auc_roc = roc.auc;
  report.roc_points = roc.points;
  report.pr_points = pr_curve(labels, scores);
  return report;
}

inline nlohmann::json eval_report_to_json(const EvalReport& r) {
  nlohmann::json j;
  j["confusion"] = {{"tn", r.cm.tn}, {"fp", r.cm.fp}, {"fn", r.cm.fn}, {"tp", r.cm.tp}};
  j["accuracy"] = r.metrics.accuracy;
  if (r.metrics.precision) j["precision"] = *r.metrics.precision;
  if (r.metrics.recall) j["recall"] = *r.metrics.recall;
  if (r.metrics.f1) j["f1"] = *r.metrics.f1;
  j["lift"] = r.metrics.lift;
  j["auc_roc"] = r.auc_roc;
  j["zero_prevalence"] = r.zero_prevalence;
  return j;
}

/// Two-column CSV with optional leading provenance comments.
inline void write_curve_csv(const std::vector<std::pair<double, double>>& points,
                            const std::string& x_name, const std::string& y_name,
                            const std::filesystem::path& path,
                            const std::vector<std::string>& provenance_lines = {}) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write curve csv: " + path.string());
  for (const auto& line : provenance_lines) out << "# " << line << '\n';
  out << x_name << ',' << y_name << '\n';
  char buf[80];
  for (const auto& [x, y] : points) {
    std::snprintf(buf, sizeof(buf), "%.12g,%.12g\n", x, y);
    out << buf;
  }
}

inline std::vector<std::pair<double, double>> read_curve_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFound(path.string());
  std::vector<std::pair<double, double>> points;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    points.emplace_back(std::strtod(line.substr(0, comma).c_str(), nullptr),
                        std::strtod(line.substr(comma + 1).c_str(), nullptr));
  }
  return points;
}

}  // namespace tip
