#pragma once

// Newton-boosted ensembles of depth-limited oblivious (symmetric) decision
// trees on logistic loss.
//
// Features are pre-binned by quantile edges computed on the training data;
// out-of-range values clamp into the outer bins. Every level of a tree
// applies one (feature, bin) test to all current nodes simultaneously, so a
// depth-d tree indexes 2^d leaves with d bit tests. Split gain is the usual
// second-order criterion  sum_leaf [ GL^2/(HL+l2) + GR^2/(HR+l2) - G^2/(H+l2) ],
// leaf values are -G/(H+l2) * learning_rate.
//
// A seeded validation slice is carved from the training rows; the iteration
// that maximizes the configured metric there (threshold 0.5) becomes
// best_iteration. Training is single-threaded and deterministic for a fixed
// (data, config, seed).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tip/errors.hpp"
#include "tip/features.hpp"
#include "tip/matrix.hpp"
#include "tip/rng.hpp"

namespace tip {

enum class EvalMetric { Accuracy, Precision, Recall, F1 };

inline const char* to_string(EvalMetric m) {
  switch (m) {
    case EvalMetric::Accuracy: return "accuracy";
    case EvalMetric::Precision: return "precision";
    case EvalMetric::Recall: return "recall";
    case EvalMetric::F1: return "f1";
  }
  return "accuracy";
}

inline EvalMetric eval_metric_from_string(std::string_view s) {
  if (s == "accuracy") return EvalMetric::Accuracy;
  if (s == "precision") return EvalMetric::Precision;
  if (s == "recall") return EvalMetric::Recall;
  if (s == "f1") return EvalMetric::F1;
  throw ConfigError("unknown eval metric: " + std::string(s));
}

struct GbdtConfig {
  int iterations = 500;
  int depth = 6;
  double learning_rate = 0.1;
  double l2_leaf_reg = 3.0;
  int max_bins = 255;
  std::uint64_t seed = 0;
  EvalMetric eval_metric = EvalMetric::Accuracy;
  double validation_fraction = 0.1;
  std::optional<int> early_stopping_rounds;
};

struct TreeLevel {
  int feature = 0;
  int bin = 0;  // route right when bin_index(x) > bin
};

struct ObliviousTree {
  std::vector<TreeLevel> levels;       // length = depth
  std::vector<double> leaf_values;     // length = 2^depth, log-odds increments
};

struct BoostedModel {
  double base_score = 0.0;  // prior log-odds
  std::vector<ObliviousTree> trees;
  std::vector<std::vector<double>> bin_edges;  // per feature, strictly increasing
  int best_iteration = 0;                      // trees used at prediction time
  GbdtConfig config;
  std::size_t n_features = 0;
  std::vector<double> train_loss;  // training logloss after each iteration
};

namespace gbdt_detail {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

/// bin(x) = number of edges <= x; clamps naturally to [0, edges.size()].
inline int bin_of(const std::vector<double>& edges, double x) {
  return static_cast<int>(std::upper_bound(edges.begin(), edges.end(), x) - edges.begin());
}

/// Quantile bin edges over a column. Candidates sit at rank positions, so the
/// edges depend only on the value order; the column minimum is never an edge
/// (it would route every row the same way).
inline std::vector<double> quantile_edges(const std::vector<double>& column, int max_bins) {
  std::vector<double> sorted = column;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> edges;
  if (sorted.empty()) return edges;
  const double min_value = sorted.front();
  const std::size_t n = sorted.size();
  for (int b = 1; b < max_bins; ++b) {
    const std::size_t pos = (static_cast<std::size_t>(b) * n) / static_cast<std::size_t>(max_bins);
    if (pos >= n) break;
    const double candidate = sorted[pos];
    if (candidate == min_value) continue;
    if (!edges.empty() && candidate == edges.back()) continue;
    edges.push_back(candidate);
  }
  return edges;
}

inline double metric_value(EvalMetric metric, std::size_t tp, std::size_t tn, std::size_t fp,
                           std::size_t fn) {
  const double total = static_cast<double>(tp + tn + fp + fn);
  switch (metric) {
    case EvalMetric::Accuracy:
      return total > 0 ? static_cast<double>(tp + tn) / total : -1.0;
    case EvalMetric::Precision:
      return tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : -1.0;
    case EvalMetric::Recall:
      return tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : -1.0;
    case EvalMetric::F1: {
      if (tp + fp == 0 || tp + fn == 0) return -1.0;
      const double p = static_cast<double>(tp) / static_cast<double>(tp + fp);
      const double r = static_cast<double>(tp) / static_cast<double>(tp + fn);
      return p + r > 0 ? 2.0 * p * r / (p + r) : -1.0;
    }
  }
  return -1.0;
}

}  // namespace gbdt_detail

inline void validate(const GbdtConfig& cfg) {
  if (cfg.iterations < 1) throw ConfigError("gbdt: iterations must be >= 1");
  if (cfg.depth < 1) throw ConfigError("gbdt: depth must be >= 1");
  if (cfg.learning_rate <= 0.0 || cfg.learning_rate > 1.0)
    throw ConfigError("gbdt: learning_rate must lie in (0, 1]");
  if (cfg.max_bins < 2 || cfg.max_bins > 65535)
    throw ConfigError("gbdt: max_bins must lie in [2, 65535]");
  if (cfg.validation_fraction < 0.0 || cfg.validation_fraction >= 1.0)
    throw ConfigError("gbdt: validation_fraction must lie in [0, 1)");
  if (cfg.early_stopping_rounds && *cfg.early_stopping_rounds < 1)
    throw ConfigError("gbdt: early_stopping_rounds must be >= 1");
}

inline BoostedModel fit(const FeatureMatrix& x, const std::vector<int>& y,
                        const GbdtConfig& cfg) {
  validate(cfg);
  if (auto violations = leakage_guard(x); !violations.empty()) {
    std::string joined;
    for (const auto& v : violations) joined += (joined.empty() ? "" : ", ") + v;
    throw LeakageViolation(joined);
  }
  const std::size_t n = x.values.rows();
  const std::size_t p = x.values.cols();
  if (y.size() != n) throw LengthMismatch("gbdt fit: rows and labels differ");
  if (n == 0) throw EmptyInput("gbdt fit: no rows");
  if (p == 0) throw EmptyInput("gbdt fit: no feature columns");

  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t i = 0; i < n; ++i)
      if (!std::isfinite(x.values(i, j)))
        throw NonFiniteFeature("gbdt fit: non-finite value in column " + x.column_names[j]);

  // Validation slice, carved from the provided rows.
  std::size_t n_val =
      static_cast<std::size_t>(std::lround(cfg.validation_fraction * static_cast<double>(n)));
  if (n_val >= n) n_val = n - 1;
  std::vector<std::uint8_t> is_val(n, 0);
  if (n_val > 0) {
    Rng rng(derive_seed(cfg.seed, "gbdt-validation"));
    for (const auto i : rng.sample_indices(n, n_val)) is_val[i] = 1;
  }
  std::vector<std::size_t> fit_rows;
  fit_rows.reserve(n - n_val);
  std::vector<std::size_t> val_rows;
  val_rows.reserve(n_val);
  for (std::size_t i = 0; i < n; ++i) (is_val[i] ? val_rows : fit_rows).push_back(i);

  std::size_t fit_pos = 0;
  for (const auto i : fit_rows) fit_pos += static_cast<std::size_t>(y[i] == 1);
  if (fit_pos == 0 || fit_pos == fit_rows.size())
    throw SingleClassError("gbdt fit: training rows contain a single class");

  BoostedModel model;
  model.config = cfg;
  model.n_features = p;

  // Quantile binning.
  model.bin_edges.resize(p);
  std::vector<std::vector<std::uint16_t>> bins(p, std::vector<std::uint16_t>(n));
  {
    std::vector<double> column(n);
    for (std::size_t j = 0; j < p; ++j) {
      for (std::size_t i = 0; i < n; ++i) column[i] = x.values(i, j);
      model.bin_edges[j] = gbdt_detail::quantile_edges(column, cfg.max_bins);
      const auto& edges = model.bin_edges[j];
      for (std::size_t i = 0; i < n; ++i)
        bins[j][i] = static_cast<std::uint16_t>(gbdt_detail::bin_of(edges, column[i]));
    }
  }

  double p_prior = static_cast<double>(fit_pos) / static_cast<double>(fit_rows.size());
  p_prior = std::clamp(p_prior, 1e-6, 1.0 - 1e-6);
  model.base_score = std::log(p_prior / (1.0 - p_prior));

  std::vector<double> margin(n, model.base_score);
  std::vector<double> grad(n, 0.0), hess(n, 0.0);
  std::vector<std::uint32_t> leaf(n, 0);
  const double l2 = cfg.l2_leaf_reg;
  const std::size_t n_leaves = std::size_t{1} << cfg.depth;

  double best_metric = -std::numeric_limits<double>::infinity();
  int best_iter = 0;
  const bool has_val = !val_rows.empty();

  std::vector<double> hist_g, hist_h, gain_at;
  std::vector<double> node_g, node_h;

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    for (const auto i : fit_rows) {
      const double prob = gbdt_detail::sigmoid(margin[i]);
      grad[i] = prob - static_cast<double>(y[i]);
      hess[i] = prob * (1.0 - prob);
    }

    ObliviousTree tree;
    tree.levels.reserve(static_cast<std::size_t>(cfg.depth));
    std::fill(leaf.begin(), leaf.end(), 0u);
    std::size_t n_nodes = 1;

    for (int level = 0; level < cfg.depth; ++level) {
      node_g.assign(n_nodes, 0.0);
      node_h.assign(n_nodes, 0.0);
      for (const auto i : fit_rows) {
        node_g[leaf[i]] += grad[i];
        node_h[leaf[i]] += hess[i];
      }
      double parent_term = 0.0;
      for (std::size_t nd = 0; nd < n_nodes; ++nd)
        parent_term += node_g[nd] * node_g[nd] / (node_h[nd] + l2);

      double best_gain = -std::numeric_limits<double>::infinity();
      int best_feature = -1, best_bin = -1;

      for (std::size_t j = 0; j < p; ++j) {
        const std::size_t nb = model.bin_edges[j].size() + 1;
        if (nb < 2) continue;
        hist_g.assign(n_nodes * nb, 0.0);
        hist_h.assign(n_nodes * nb, 0.0);
        const auto& bj = bins[j];
        for (const auto i : fit_rows) {
          const std::size_t slot = leaf[i] * nb + bj[i];
          hist_g[slot] += grad[i];
          hist_h[slot] += hess[i];
        }
        gain_at.assign(nb - 1, 0.0);
        for (std::size_t nd = 0; nd < n_nodes; ++nd) {
          double gl = 0.0, hl = 0.0;
          const double gt = node_g[nd];
          const double ht = node_h[nd];
          const std::size_t base = nd * nb;
          for (std::size_t b = 0; b + 1 < nb; ++b) {
            gl += hist_g[base + b];
            hl += hist_h[base + b];
            const double gr = gt - gl;
            const double hr = ht - hl;
            gain_at[b] += gl * gl / (hl + l2) + gr * gr / (hr + l2);
          }
        }
        for (std::size_t b = 0; b + 1 < nb; ++b) {
          const double gain = gain_at[b] - parent_term;
          if (gain > best_gain) {
            best_gain = gain;
            best_feature = static_cast<int>(j);
            best_bin = static_cast<int>(b);
          }
        }
      }

      if (best_feature < 0) {
        // No splittable feature; emit a level that routes everything left.
        tree.levels.push_back({0, static_cast<int>(model.bin_edges[0].size())});
        for (std::size_t i = 0; i < n; ++i) leaf[i] <<= 1;
      } else {
        tree.levels.push_back({best_feature, best_bin});
        const auto& bj = bins[static_cast<std::size_t>(best_feature)];
        for (std::size_t i = 0; i < n; ++i)
          leaf[i] = (leaf[i] << 1) | static_cast<std::uint32_t>(bj[i] > best_bin);
      }
      n_nodes <<= 1;
    }

    std::vector<double> leaf_g(n_leaves, 0.0), leaf_h(n_leaves, 0.0);
    for (const auto i : fit_rows) {
      leaf_g[leaf[i]] += grad[i];
      leaf_h[leaf[i]] += hess[i];
    }
    tree.leaf_values.resize(n_leaves);
    for (std::size_t lf = 0; lf < n_leaves; ++lf)
      tree.leaf_values[lf] = -leaf_g[lf] / (leaf_h[lf] + l2) * cfg.learning_rate;

    for (std::size_t i = 0; i < n; ++i) margin[i] += tree.leaf_values[leaf[i]];
    model.trees.push_back(std::move(tree));

    double loss = 0.0;
    for (const auto i : fit_rows)
      loss += y[i] == 1 ? gbdt_detail::softplus(-margin[i]) : gbdt_detail::softplus(margin[i]);
    model.train_loss.push_back(loss / static_cast<double>(fit_rows.size()));

    if (has_val) {
      std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
      for (const auto i : val_rows) {
        const bool pred = gbdt_detail::sigmoid(margin[i]) >= 0.5;
        if (y[i] == 1)
          (pred ? tp : fn) += 1;
        else
          (pred ? fp : tn) += 1;
      }
      const double value = gbdt_detail::metric_value(cfg.eval_metric, tp, tn, fp, fn);
      if (value > best_metric) {
        best_metric = value;
        best_iter = iter + 1;
      }
      if (cfg.early_stopping_rounds && (iter + 1) - best_iter >= *cfg.early_stopping_rounds)
        break;
    }
  }

  model.best_iteration = has_val ? best_iter : static_cast<int>(model.trees.size());
  return model;
}

inline std::vector<double> predict_proba(const BoostedModel& model, const Matrix& x) {
  if (x.cols() != model.n_features)
    throw ShapeMismatch("predict: column count does not match training width");
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();

  std::vector<std::vector<std::uint16_t>> bins(p, std::vector<std::uint16_t>(n));
  for (std::size_t j = 0; j < p; ++j) {
    const auto& edges = model.bin_edges[j];
    for (std::size_t i = 0; i < n; ++i)
      bins[j][i] = static_cast<std::uint16_t>(gbdt_detail::bin_of(edges, x(i, j)));
  }

  std::vector<double> probs(n);
  const std::size_t used = static_cast<std::size_t>(model.best_iteration);
  for (std::size_t i = 0; i < n; ++i) {
    double margin = model.base_score;
    for (std::size_t t = 0; t < used && t < model.trees.size(); ++t) {
      const auto& tree = model.trees[t];
      std::uint32_t idx = 0;
      for (const auto& level : tree.levels)
        idx = (idx << 1) |
              static_cast<std::uint32_t>(bins[static_cast<std::size_t>(level.feature)][i] > level.bin);
      margin += tree.leaf_values[idx];
    }
    probs[i] = gbdt_detail::sigmoid(margin);
  }
  return probs;
}

inline std::vector<double> predict_proba(const BoostedModel& model, const FeatureMatrix& x) {
  return predict_proba(model, x.values);
}

/// Label 1 iff p >= threshold (the boundary itself maps to 1).
inline std::vector<int> predict_label(const std::vector<double>& probs, double threshold = 0.5) {
  std::vector<int> out;
  out.reserve(probs.size());
  for (const double p : probs) out.push_back(p >= threshold ? 1 : 0);
  return out;
}

// -- model container ----------------------------------------------------------

inline constexpr int kModelFormatVersion = 1;
inline constexpr const char* kModelFormatName = "tip-gbdt";

inline nlohmann::json model_to_json(const BoostedModel& model) {
  nlohmann::json j;
  j["format"] = kModelFormatName;
  j["version"] = kModelFormatVersion;
  nlohmann::json cfg;
  cfg["iterations"] = model.config.iterations;
  cfg["depth"] = model.config.depth;
  cfg["learning_rate"] = model.config.learning_rate;
  cfg["l2_leaf_reg"] = model.config.l2_leaf_reg;
  cfg["max_bins"] = model.config.max_bins;
  cfg["seed"] = model.config.seed;
  cfg["eval_metric"] = to_string(model.config.eval_metric);
  cfg["validation_fraction"] = model.config.validation_fraction;
  if (model.config.early_stopping_rounds)
    cfg["early_stopping_rounds"] = *model.config.early_stopping_rounds;
  j["config"] = std::move(cfg);
  j["n_features"] = model.n_features;
  j["base_score"] = model.base_score;
  j["best_iteration"] = model.best_iteration;
  j["bin_edges"] = model.bin_edges;
  auto trees = nlohmann::json::array();
  for (const auto& tree : model.trees) {
    nlohmann::json t;
    auto levels = nlohmann::json::array();
    for (const auto& lv : tree.levels) levels.push_back({lv.feature, lv.bin});
    t["levels"] = std::move(levels);
    t["leaf_values"] = tree.leaf_values;
    trees.push_back(std::move(t));
  }
  j["trees"] = std::move(trees);
  j["train_loss"] = model.train_loss;
  return j;
}

inline BoostedModel model_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("format") || j["format"] != kModelFormatName)
    throw CorruptModel("not a recognized model container");
  const int version = j.at("version").get<int>();
  if (version > kModelFormatVersion)
    throw VersionError("model container version " + std::to_string(version) +
                       " is newer than supported version " +
                       std::to_string(kModelFormatVersion));
  try {
    BoostedModel model;
    const auto& cfg = j.at("config");
    model.config.iterations = cfg.at("iterations").get<int>();
    model.config.depth = cfg.at("depth").get<int>();
    model.config.learning_rate = cfg.at("learning_rate").get<double>();
    model.config.l2_leaf_reg = cfg.at("l2_leaf_reg").get<double>();
    model.config.max_bins = cfg.at("max_bins").get<int>();
    model.config.seed = cfg.at("seed").get<std::uint64_t>();
    model.config.eval_metric = eval_metric_from_string(cfg.at("eval_metric").get<std::string>());
    model.config.validation_fraction = cfg.at("validation_fraction").get<double>();
    if (cfg.contains("early_stopping_rounds"))
      model.config.early_stopping_rounds = cfg.at("early_stopping_rounds").get<int>();
    model.n_features = j.at("n_features").get<std::size_t>();
    model.base_score = j.at("base_score").get<double>();
    model.best_iteration = j.at("best_iteration").get<int>();
    model.bin_edges = j.at("bin_edges").get<std::vector<std::vector<double>>>();
    for (const auto& t : j.at("trees")) {
      ObliviousTree tree;
      for (const auto& lv : t.at("levels"))
        tree.levels.push_back({lv.at(0).get<int>(), lv.at(1).get<int>()});
      tree.leaf_values = t.at("leaf_values").get<std::vector<double>>();
      tree.levels.shrink_to_fit();
      model.trees.push_back(std::move(tree));
    }
    model.train_loss = j.at("train_loss").get<std::vector<double>>();
    if (model.best_iteration < 0 ||
        model.best_iteration > static_cast<int>(model.trees.size()))
      throw CorruptModel("best_iteration outside ensemble range");
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw CorruptModel(std::string("malformed model container: ") + e.what());
  }
}

inline void save_model(const BoostedModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write model file: " + path.string());
  out << model_to_json(model).dump() << '\n';
}

inline BoostedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFound(path.string());
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw CorruptModel("model file is not valid JSON: " + path.string());
  return model_from_json(j);
}

}  // namespace tip
