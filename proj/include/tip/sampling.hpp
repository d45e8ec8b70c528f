#pragma once

// Class rebalancing and the train/test split. Downsampling keeps a seeded
// uniform sample of the majority class (ceil(N * keep), the rounding that
// reproduces published class counts) and never touches the minority class.
// The rebalanced set is frozen before splitting.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "tip/corpus.hpp"
#include "tip/errors.hpp"
#include "tip/rng.hpp"

namespace tip {

struct SplitConfig {
  double train_fraction = 0.75;
  double downsample_keep = 0.15;  // patents default; trials use 0.05
  std::uint64_t seed = 0;
  bool stratified = false;
};

/// Keep ceil(N_majority * keep) majority-class records chosen uniformly
/// without replacement; relative record order is preserved and minority
/// records are untouched. A class-count tie is a no-op.
inline LabeledDataset downsample_majority(const LabeledDataset& dataset, double keep,
                                          std::uint64_t seed) {
  if (keep <= 0.0 || keep > 1.0) throw ConfigError("downsample: keep must lie in (0, 1]");
  std::size_t n_pos = 0, n_neg = 0;
  for (int y : dataset.labels) (y == 1 ? n_pos : n_neg) += 1;
  if (n_pos == 0 || n_neg == 0)
    throw DegenerateInput("downsample: both classes must be present");
  if (n_pos == n_neg) return dataset;

  const int majority = n_neg > n_pos ? 0 : 1;
  const std::size_t n_major = std::max(n_pos, n_neg);
  const std::size_t keep_n =
      static_cast<std::size_t>(std::ceil(keep * static_cast<double>(n_major)));

  std::vector<std::size_t> major_at;
  major_at.reserve(n_major);
  for (std::size_t i = 0; i < dataset.labels.size(); ++i)
    if (dataset.labels[i] == majority) major_at.push_back(i);

  Rng rng(seed);
  const auto chosen = rng.sample_indices(major_at.size(), keep_n);
  std::set<std::size_t> keep_rows;
  for (const auto c : chosen) keep_rows.insert(major_at[c]);

  LabeledDataset out;
  out.kind = dataset.kind;
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    if (dataset.labels[i] != majority || keep_rows.count(i)) {
      out.records.push_back(dataset.records[i]);
      out.labels.push_back(dataset.labels[i]);
    }
  }
  return out;
}

struct SplitResult {
  LabeledDataset train;
  LabeledDataset test;
};

namespace sampling_detail {

inline LabeledDataset take(const LabeledDataset& ds, const std::vector<std::size_t>& rows) {
  LabeledDataset out;
  out.kind = ds.kind;
  out.records.reserve(rows.size());
  out.labels.reserve(rows.size());
  for (const auto i : rows) {
    out.records.push_back(ds.records[i]);
    out.labels.push_back(ds.labels[i]);
  }
  return out;
}

}  // namespace sampling_detail

/// Uniform random partition with |train| = round(n * train_fraction). Both
/// partitions keep the input's relative order. The stratified flag splits
/// per class instead (off by default).
inline SplitResult train_test_split(const LabeledDataset& dataset, const SplitConfig& config) {
  if (dataset.records.empty()) throw EmptyInput("split: dataset is empty");
  if (config.train_fraction <= 0.0 || config.train_fraction >= 1.0)
    throw ConfigError("split: train_fraction must lie in (0, 1)");
  const std::size_t n = dataset.records.size();
  Rng rng(config.seed);

  std::vector<std::size_t> train_rows, test_rows;
  if (!config.stratified) {
    const std::size_t train_n = static_cast<std::size_t>(
        std::lround(config.train_fraction * static_cast<double>(n)));
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(perm);
    std::set<std::size_t> in_train(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(train_n));
    for (std::size_t i = 0; i < n; ++i)
      (in_train.count(i) ? train_rows : test_rows).push_back(i);
  } else {
    for (int cls : {0, 1}) {
      std::vector<std::size_t> rows;
      for (std::size_t i = 0; i < n; ++i)
        if (dataset.labels[i] == cls) rows.push_back(i);
      const std::size_t train_n = static_cast<std::size_t>(
          std::lround(config.train_fraction * static_cast<double>(rows.size())));
      rng.shuffle(rows);
      for (std::size_t i = 0; i < rows.size(); ++i)
        (i < train_n ? train_rows : test_rows).push_back(rows[i]);
    }
    std::sort(train_rows.begin(), train_rows.end());
    std::sort(test_rows.begin(), test_rows.end());
  }
  return {sampling_detail::take(dataset, train_rows), sampling_detail::take(dataset, test_rows)};
}

/// Everything needed to reproduce a run's partition bit-exactly.
struct SplitManifest {
  std::uint64_t seed = 0;
  double downsample_keep = 1.0;
  double train_fraction = 0.75;
  std::string label_kind = "patents";
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
};

inline nlohmann::json split_manifest_to_json(const SplitManifest& m) {
  nlohmann::json j;
  j["seed"] = m.seed;
  j["downsample_keep"] = m.downsample_keep;
  j["train_fraction"] = m.train_fraction;
  j["label_kind"] = m.label_kind;
  j["train_ids"] = m.train_ids;
  j["test_ids"] = m.test_ids;
  return j;
}

inline SplitManifest split_manifest_from_json(const nlohmann::json& j) {
  SplitManifest m;
  m.seed = j.at("seed").get<std::uint64_t>();
  m.downsample_keep = j.at("downsample_keep").get<double>();
  m.train_fraction = j.at("train_fraction").get<double>();
  m.label_kind = j.at("label_kind").get<std::string>();
  m.train_ids = j.at("train_ids").get<std::vector<std::string>>();
  m.test_ids = j.at("test_ids").get<std::vector<std::string>>();
  return m;
}

}  // namespace tip
