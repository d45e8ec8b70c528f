#pragma once

// Temporal robustness audit: balanced per-year sampling, delta-label points
// (real label minus predicted probability) and per-decade confusion matrices.
// Sampling prefers the test partition and falls back to the full pool when a
// year cannot supply enough records of a label; fallback points are flagged.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "tip/corpus.hpp"
#include "tip/errors.hpp"
#include "tip/eval.hpp"
#include "tip/features.hpp"
#include "tip/gbdt.hpp"
#include "tip/rng.hpp"

namespace tip {

struct TemporalPoint {
  std::string publication_id;
  int year = 0;
  int real_label = 0;
  double predicted_prob = 0.0;
  double delta = 0.0;  // real_label - predicted_prob, exactly
  bool correct = false;
  bool from_test_partition = false;
};

struct YearShortfall {
  int year = 0;
  int label = 0;
  int requested = 0;
  int taken = 0;
};

struct YearSample {
  std::vector<std::size_t> indices;  // into the sampled dataset
  std::vector<bool> from_test;      // aligned with indices
  std::vector<YearShortfall> shortfalls;
};

/// Draw up to n_per_label records per (year, label). Years with fewer
/// available take all available; the shortfall is reported, not thrown.
inline YearSample sample_per_year(const LabeledDataset& dataset,
                                  const std::set<std::string>& test_ids, int year_min,
                                  int year_max, int n_per_label, std::uint64_t seed,
                                  bool prefer_test = true) {
  if (year_min > year_max) throw ConfigError("sample_per_year: empty year range");
  if (n_per_label < 1) throw ConfigError("sample_per_year: n_per_label must be >= 1");
  Rng rng(seed);
  YearSample out;
  for (int year = year_min; year <= year_max; ++year) {
    for (int label : {0, 1}) {
      std::vector<std::size_t> pool_test, pool_rest;
      for (std::size_t i = 0; i < dataset.records.size(); ++i) {
        if (dataset.records[i].year != year || dataset.labels[i] != label) continue;
        if (prefer_test && test_ids.count(dataset.records[i].id))
          pool_test.push_back(i);
        else
          pool_rest.push_back(i);
      }
      const std::size_t want = static_cast<std::size_t>(n_per_label);
      std::size_t taken = 0;
      for (const auto pick : rng.sample_indices(pool_test.size(), want)) {
        out.indices.push_back(pool_test[pick]);
        out.from_test.push_back(true);
        ++taken;
      }
      if (taken < want) {
        for (const auto pick : rng.sample_indices(pool_rest.size(), want - taken)) {
          out.indices.push_back(pool_rest[pick]);
          out.from_test.push_back(false);
          ++taken;
        }
      }
      if (taken < want)
        out.shortfalls.push_back({year, label, n_per_label, static_cast<int>(taken)});
    }
  }
  return out;
}

/// Score the sampled records with a trained model. `features` rows must be
/// aligned with `sample.indices`.
inline std::vector<TemporalPoint> delta_labels(const BoostedModel& model,
                                               const FeatureMatrix& features,
                                               const LabeledDataset& dataset,
                                               const YearSample& sample,
                                               double threshold = 0.5) {
  if (features.values.rows() != sample.indices.size())
    throw LengthMismatch("delta_labels: feature rows do not match sample size");
  const auto probs = predict_proba(model, features);
  std::vector<TemporalPoint> points;
  points.reserve(sample.indices.size());
  for (std::size_t i = 0; i < sample.indices.size(); ++i) {
    const std::size_t row = sample.indices[i];
    TemporalPoint pt;
    pt.publication_id = dataset.records[row].id;
    pt.year = dataset.records[row].year;
    pt.real_label = dataset.labels[row];
    pt.predicted_prob = probs[i];
    pt.delta = static_cast<double>(pt.real_label) - pt.predicted_prob;
    pt.correct = (probs[i] >= threshold ? 1 : 0) == pt.real_label;
    pt.from_test_partition = sample.from_test[i];
    points.push_back(std::move(pt));
  }
  return points;
}

struct DecadeRow {
  int year_lo = 0;
  int year_hi = 0;
  ConfusionMatrix cm;
  std::optional<double> accuracy;  // absent when the decade holds no points
};

inline std::vector<std::pair<int, int>> default_decades() {
  return {{1990, 1999}, {2000, 2009}, {2010, 2017}};
}

/// Per-decade confusion matrices from the correctness rule (predicted label =
/// probability >= 0.5). Boundaries must cover every audited year disjointly.
inline std::vector<DecadeRow> decade_confusions(
    const std::vector<TemporalPoint>& points,
    const std::vector<std::pair<int, int>>& boundaries = default_decades()) {
  std::vector<DecadeRow> rows;
  rows.reserve(boundaries.size());
  for (const auto& [lo, hi] : boundaries) rows.push_back({lo, hi, {}, std::nullopt});
  for (const auto& pt : points) {
    DecadeRow* home = nullptr;
    for (auto& row : rows) {
      if (pt.year >= row.year_lo && pt.year <= row.year_hi) {
        home = &row;
        break;
      }
    }
    if (home == nullptr) throw UncoveredYear(pt.year);
    const bool predicted_one = pt.predicted_prob >= 0.5;
    if (pt.real_label == 1)
      (predicted_one ? home->cm.tp : home->cm.fn) += 1;
    else
      (predicted_one ? home->cm.fp : home->cm.tn) += 1;
  }
  for (auto& row : rows) {
    if (row.cm.total() > 0)
      row.accuracy =
          static_cast<double>(row.cm.tp + row.cm.tn) / static_cast<double>(row.cm.total());
  }
  return rows;
}

inline void write_delta_csv(const std::vector<TemporalPoint>& points,
                            const std::filesystem::path& path,
                            const std::vector<std::string>& provenance_lines = {}) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write delta csv: " + path.string());
  for (const auto& line : provenance_lines) out << "# " << line << '\n';
  out << "id,year,real_label,predicted_prob,delta,correct,from_test\n";
  char buf[64];
  for (const auto& pt : points) {
    std::snprintf(buf, sizeof(buf), "%.12g,%.12g", pt.predicted_prob, pt.delta);
    out << pt.publication_id << ',' << pt.year << ',' << pt.real_label << ',' << buf << ','
        << (pt.correct ? 1 : 0) << ',' << (pt.from_test_partition ? 1 : 0) << '\n';
  }
}

inline nlohmann::json decades_to_json(const std::vector<DecadeRow>& rows) {
  auto arr = nlohmann::json::array();
  for (const auto& row : rows) {
    nlohmann::json j;
    j["year_lo"] = row.year_lo;
    j["year_hi"] = row.year_hi;
    j["confusion"] = {{"tn", row.cm.tn}, {"fp", row.cm.fp}, {"fn", row.cm.fn}, {"tp", row.cm.tp}};
    if (row.accuracy) j["accuracy"] = *row.accuracy;
    arr.push_back(std::move(j));
  }
  return arr;
}

}  // namespace tip
