#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <fstream>
#include <map>

#include "helpers.hpp"
#include "tip/gbdt.hpp"
#include "tip/rng.hpp"

using Catch::Approx;

namespace {

tip::FeatureMatrix make_matrix(const std::vector<std::vector<double>>& rows,
                               std::vector<std::string> names = {}) {
  tip::FeatureMatrix fm;
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  fm.values = tip::Matrix(rows.size(), cols);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols; ++j) fm.values(i, j) = rows[i][j];
  if (names.empty())
    for (std::size_t j = 0; j < cols; ++j) names.push_back("f" + std::to_string(j));
  fm.column_names = std::move(names);
  fm.column_blocks.assign(cols, tip::BlockTag::Metadata);
  return fm;
}

struct Fixture {
  tip::FeatureMatrix x;
  std::vector<int> y;
};

/// One informative feature separates the classes; the rest is noise.
Fixture separable_fixture(std::size_t n = 200, std::uint64_t seed = 5) {
  tip::Rng rng(seed);
  std::vector<std::vector<double>> rows;
  std::vector<int> y;
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    rows.push_back({label + 0.01 * rng.uniform01(), rng.normal(), rng.normal()});
    y.push_back(label);
  }
  return {make_matrix(rows), y};
}

Fixture xor_fixture() {
  std::vector<std::vector<double>> rows;
  std::vector<int> y;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int copy = 0; copy < 25; ++copy) {
        rows.push_back({static_cast<double>(a), static_cast<double>(b)});
        y.push_back(a ^ b);
      }
  return {make_matrix(rows), y};
}

Fixture random_logistic_fixture(std::size_t n, std::size_t p, std::uint64_t seed) {
  tip::Rng rng(seed);
  std::vector<double> w(p);
  for (auto& v : w) v = rng.normal();
  for (;;) {
    std::vector<std::vector<double>> rows;
    std::vector<int> y;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> row(p);
      double z = 0;
      for (std::size_t j = 0; j < p; ++j) {
        row[j] = rng.normal();
        z += w[j] * row[j];
      }
      const int label = rng.bernoulli(1.0 / (1.0 + std::exp(-z))) ? 1 : 0;
      pos += static_cast<std::size_t>(label);
      rows.push_back(std::move(row));
      y.push_back(label);
    }
    if (pos > 0 && pos < n) return {make_matrix(rows), y};
  }
}

double train_accuracy(const tip::BoostedModel& model, const Fixture& f) {
  const auto labels = tip::predict_label(tip::predict_proba(model, f.x));
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += labels[i] == f.y[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

}  // namespace

TEST_CASE("a linearly separable set reaches training accuracy 1.0") {
  const auto f = separable_fixture();
  tip::GbdtConfig cfg;
  cfg.iterations = 200;
  cfg.depth = 2;
  cfg.validation_fraction = 0.0;
  cfg.seed = 1;
  const auto model = tip::fit(f.x, f.y, cfg);
  CHECK(train_accuracy(model, f) == 1.0);
}

TEST_CASE("XOR of two binary features is separated at depth >= 2") {
  const auto f = xor_fixture();
  tip::GbdtConfig cfg;
  cfg.iterations = 100;
  cfg.depth = 2;
  cfg.learning_rate = 0.3;
  cfg.validation_fraction = 0.0;
  cfg.seed = 2;
  const auto model = tip::fit(f.x, f.y, cfg);
  CHECK(train_accuracy(model, f) == 1.0);
}

TEST_CASE("all-identical rows collapse to the clamped prior with zero leaves") {
  std::vector<std::vector<double>> rows(40, {1.5, -2.0});
  std::vector<int> y;
  for (int i = 0; i < 40; ++i) y.push_back(i < 10 ? 1 : 0);
  const auto x = make_matrix(rows);
  tip::GbdtConfig cfg;
  cfg.iterations = 5;
  cfg.validation_fraction = 0.0;
  cfg.seed = 3;
  const auto model = tip::fit(x, y, cfg);
  const double prior = 1.0 / (1.0 + std::exp(-model.base_score));
  CHECK(prior == Approx(0.25).epsilon(1e-12));
  for (const auto& tree : model.trees)
    for (const double v : tree.leaf_values) CHECK(v == 0.0);
  for (const double p : tip::predict_proba(model, x)) CHECK(p == Approx(prior));
}

TEST_CASE("a model with zero usable trees predicts sigmoid(base_score)") {
  const auto f = separable_fixture(60, 9);
  tip::GbdtConfig cfg;
  cfg.iterations = 3;
  cfg.validation_fraction = 0.0;
  cfg.seed = 4;
  auto model = tip::fit(f.x, f.y, cfg);
  model.best_iteration = 0;
  const double expected = 1.0 / (1.0 + std::exp(-model.base_score));
  for (const double p : tip::predict_proba(model, f.x)) CHECK(p == Approx(expected));
}

TEST_CASE("duplicate rows get identical probabilities") {
  const auto f = separable_fixture(80, 13);
  tip::GbdtConfig cfg;
  cfg.iterations = 30;
  cfg.validation_fraction = 0.0;
  cfg.seed = 5;
  const auto model = tip::fit(f.x, f.y, cfg);
  tip::Matrix two(2, f.x.values.cols());
  for (std::size_t j = 0; j < f.x.values.cols(); ++j) two(0, j) = two(1, j) = f.x.values(0, j);
  const auto probs = tip::predict_proba(model, two);
  CHECK(probs[0] == probs[1]);
}

TEST_CASE("training logloss is non-increasing across iterations") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto f = random_logistic_fixture(300, 6, 100 + seed);
    tip::GbdtConfig cfg;
    cfg.iterations = 60;
    cfg.validation_fraction = 0.0;
    cfg.seed = seed;
    const auto model = tip::fit(f.x, f.y, cfg);
    for (std::size_t t = 1; t < model.train_loss.size(); ++t)
      CHECK(model.train_loss[t] <= model.train_loss[t - 1] + 1e-9);
  }
}

TEST_CASE("prediction is row-local") {
  const auto f = separable_fixture(100, 23);
  tip::GbdtConfig cfg;
  cfg.iterations = 25;
  cfg.validation_fraction = 0.0;
  cfg.seed = 6;
  const auto model = tip::fit(f.x, f.y, cfg);
  const auto all = tip::predict_proba(model, f.x);
  tip::Matrix one(1, f.x.values.cols());
  for (std::size_t j = 0; j < f.x.values.cols(); ++j) one(0, j) = f.x.values(17, j);
  CHECK(tip::predict_proba(model, one)[0] == all[17]);
}

TEST_CASE("rank transform of feature columns leaves the model bit-identical") {
  const auto f = random_logistic_fixture(250, 5, 321);
  // dense ranks per column: equal values share a rank, order is preserved
  auto ranked = f;
  for (std::size_t j = 0; j < f.x.values.cols(); ++j) {
    std::vector<double> values;
    for (std::size_t i = 0; i < f.x.values.rows(); ++i) values.push_back(f.x.values(i, j));
    auto sorted = values;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::map<double, double> rank;
    for (std::size_t r = 0; r < sorted.size(); ++r) rank[sorted[r]] = static_cast<double>(r);
    for (std::size_t i = 0; i < f.x.values.rows(); ++i)
      ranked.x.values(i, j) = rank[values[i]];
  }
  tip::GbdtConfig cfg;
  cfg.iterations = 40;
  cfg.validation_fraction = 0.1;
  cfg.seed = 7;
  const auto base = tip::fit(f.x, f.y, cfg);
  const auto transformed = tip::fit(ranked.x, f.y, cfg);
  REQUIRE(base.trees.size() == transformed.trees.size());
  for (std::size_t t = 0; t < base.trees.size(); ++t) {
    for (std::size_t l = 0; l < base.trees[t].levels.size(); ++l) {
      CHECK(base.trees[t].levels[l].feature == transformed.trees[t].levels[l].feature);
      CHECK(base.trees[t].levels[l].bin == transformed.trees[t].levels[l].bin);
    }
    CHECK(base.trees[t].leaf_values == transformed.trees[t].leaf_values);
  }
  const auto pa = tip::predict_proba(base, f.x);
  const auto pb = tip::predict_proba(transformed, ranked.x);
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i] == pb[i]);
}

TEST_CASE("fit is deterministic for a fixed seed") {
  const auto f = random_logistic_fixture(200, 4, 99);
  tip::GbdtConfig cfg;
  cfg.iterations = 30;
  cfg.seed = 8;
  const auto a = tip::fit(f.x, f.y, cfg);
  const auto b = tip::fit(f.x, f.y, cfg);
  CHECK(tip::model_to_json(a) == tip::model_to_json(b));
}

TEST_CASE("threshold rule: 0.49 -> 0, 0.51 -> 1, 0.5 -> 1") {
  const auto labels = tip::predict_label({0.49, 0.51, 0.5});
  CHECK(labels == std::vector<int>{0, 1, 1});
}

TEST_CASE("validation metric drives best_iteration") {
  const auto f = separable_fixture(200, 55);
  tip::GbdtConfig cfg;
  cfg.iterations = 50;
  cfg.validation_fraction = 0.2;
  cfg.seed = 9;
  const auto model = tip::fit(f.x, f.y, cfg);
  CHECK(model.best_iteration >= 1);
  CHECK(model.best_iteration <= static_cast<int>(model.trees.size()));
}

TEST_CASE("early stopping truncates the ensemble") {
  const auto f = separable_fixture(200, 56);
  tip::GbdtConfig cfg;
  cfg.iterations = 400;
  cfg.validation_fraction = 0.2;
  cfg.early_stopping_rounds = 10;
  cfg.seed = 10;
  const auto model = tip::fit(f.x, f.y, cfg);
  CHECK(model.trees.size() < 400);
}

TEST_CASE("fit validates input") {
  const auto f = separable_fixture(50, 77);
  tip::GbdtConfig cfg;
  cfg.validation_fraction = 0.0;

  auto single = f;
  std::fill(single.y.begin(), single.y.end(), 1);
  CHECK_THROWS_AS(tip::fit(single.x, single.y, cfg), tip::SingleClassError);

  auto nan = f;
  nan.x.values(3, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(tip::fit(nan.x, nan.y, cfg), tip::NonFiniteFeature);

  auto short_y = f.y;
  short_y.pop_back();
  CHECK_THROWS_AS(tip::fit(f.x, short_y, cfg), tip::LengthMismatch);

  tip::GbdtConfig bad = cfg;
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(tip::fit(f.x, f.y, bad), tip::ConfigError);
}

TEST_CASE("fit refuses a matrix with leakage columns") {
  auto f = separable_fixture(50, 78);
  f.x.column_names[1] = "times_cited";
  tip::GbdtConfig cfg;
  cfg.validation_fraction = 0.0;
  CHECK_THROWS_AS(tip::fit(f.x, f.y, cfg), tip::LeakageViolation);
}

TEST_CASE("predict rejects a width mismatch") {
  const auto f = separable_fixture(60, 79);
  tip::GbdtConfig cfg;
  cfg.iterations = 5;
  cfg.validation_fraction = 0.0;
  const auto model = tip::fit(f.x, f.y, cfg);
  const tip::Matrix wrong(2, f.x.values.cols() + 1);
  CHECK_THROWS_AS(tip::predict_proba(model, wrong), tip::ShapeMismatch);
}

TEST_CASE("save/load round-trips bit-identical predictions") {
  tiptest::ScratchDir dir("model");
  const auto f = random_logistic_fixture(150, 5, 888);
  tip::GbdtConfig cfg;
  cfg.iterations = 40;
  cfg.seed = 11;
  const auto model = tip::fit(f.x, f.y, cfg);
  const auto path = dir.path() / "model.json";
  tip::save_model(model, path);
  const auto loaded = tip::load_model(path);
  const auto pa = tip::predict_proba(model, f.x);
  const auto pb = tip::predict_proba(loaded, f.x);
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i] == pb[i]);
  CHECK(loaded.best_iteration == model.best_iteration);
}

TEST_CASE("truncated model file is corrupt") {
  tiptest::ScratchDir dir("trunc");
  const auto f = separable_fixture(50, 91);
  tip::GbdtConfig cfg;
  cfg.iterations = 5;
  cfg.validation_fraction = 0.0;
  const auto model = tip::fit(f.x, f.y, cfg);
  const auto path = dir.path() / "model.json";
  tip::save_model(model, path);
  std::string content;
  {
    std::ifstream in(path);
    std::getline(in, content);
  }
  {
    std::ofstream out(path);
    out << content.substr(0, content.size() / 2);
  }
  CHECK_THROWS_AS(tip::load_model(path), tip::CorruptModel);
}

TEST_CASE("future container version is a version error") {
  tiptest::ScratchDir dir("version");
  const auto f = separable_fixture(50, 92);
  tip::GbdtConfig cfg;
  cfg.iterations = 5;
  cfg.validation_fraction = 0.0;
  const auto model = tip::fit(f.x, f.y, cfg);
  auto j = tip::model_to_json(model);
  j["version"] = tip::kModelFormatVersion + 1;
  const auto path = dir.path() / "model.json";
  {
    std::ofstream out(path);
    out << j.dump();
  }
  CHECK_THROWS_AS(tip::load_model(path), tip::VersionError);
}
