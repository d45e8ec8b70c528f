#pragma once

// Config-driven pipeline orchestration. A profile describes one experiment
// (corpus or synthetic generator, filter window, target label, rebalancing,
// model tiers, classifier and embedder settings); stages read the previous
// stage's artifacts out of a run directory and append their own. Every
// emitted file carries the profile hash and master seed, and a rerun of the
// same profile+seed reproduces every artifact byte-identically (the log,
// which holds timestamps, is the one exception).
//
// Stage layout inside a run directory:
//   corpus.jsonl                      (synth)
//   ingest/{filtered,rebalanced}.jsonl, filter_report.json,
//          split_manifest.json, stats.json
//   features/vocab.json, tsvd_*.json, <tier>_{train,test}.csv(+manifest)
//   models/<tier>.json
//   eval/<tier>_report.json, <tier>_{roc,pr}.csv
//   temporal/delta.csv, decades.json, shortfalls.json, delta.svg
//   report/{roc,pr}_overlay.svg, metrics.txt

#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "tip/corpus.hpp"
#include "tip/embed.hpp"
#include "tip/errors.hpp"
#include "tip/eval.hpp"
#include "tip/feature_io.hpp"
#include "tip/features.hpp"
#include "tip/gbdt.hpp"
#include "tip/sampling.hpp"
#include "tip/stats.hpp"
#include "tip/svg.hpp"
#include "tip/synth.hpp"
#include "tip/temporal.hpp"
#include "tip/tsvd.hpp"

namespace tip {

inline constexpr int kStageVersion = 1;

struct SplitProfile {
  double train_fraction = 0.75;
  bool stratified = false;
};

struct TemporalProfile {
  bool enabled = true;
  Tier tier = Tier::M3;
  int n_per_label = 5;
  std::vector<std::pair<int, int>> decades = default_decades();
};

struct ExperimentProfile {
  std::string name = "experiment";
  std::string corpus;  // path to a record file; empty means synthesize
  std::optional<SynthConfig> synth;
  CorpusFilterConfig filter;
  LabelKind label = LabelKind::Patents;
  double downsample_keep = 0.15;
  SplitProfile split;
  std::vector<Tier> tiers = {Tier::M1, Tier::M2, Tier::M3};
  GbdtConfig gbdt;
  EmbedderConfig embedder;
  FeatureConfig features;
  TemporalProfile temporal;
  bool strict_ingest = false;
  std::uint64_t seed = 42;
};

// -- profile serde ------------------------------------------------------------

namespace pipeline_detail {

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return j.at(key).get<T>();
}

inline void reject_unknown_keys(const nlohmann::json& j,
                                const std::set<std::string>& known,
                                const std::string& where) {
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

}  // namespace pipeline_detail

inline ExperimentProfile profile_from_json(const nlohmann::json& j) {
  using pipeline_detail::get_or;
  if (!j.is_object()) throw ConfigError("profile must be a JSON object");
  pipeline_detail::reject_unknown_keys(
      j,
      {"name", "corpus", "synth", "filter", "label", "downsample_keep", "split", "tiers",
       "gbdt", "embedder", "features", "temporal", "strict", "seed"},
      "profile");

  ExperimentProfile p;
  p.name = get_or<std::string>(j, "name", p.name);
  p.corpus = get_or<std::string>(j, "corpus", p.corpus);
  p.label = label_kind_from_string(get_or<std::string>(j, "label", "patents"));
  p.downsample_keep =
      get_or<double>(j, "downsample_keep", p.label == LabelKind::Patents ? 0.15 : 0.05);
  p.strict_ingest = get_or<bool>(j, "strict", false);
  p.seed = get_or<std::uint64_t>(j, "seed", p.seed);

  if (j.contains("synth") && !j.at("synth").is_null()) {
    const auto& s = j.at("synth");
    SynthConfig sc;
    sc.n = get_or<std::size_t>(s, "n", sc.n);
    sc.year_min = get_or<int>(s, "year_min", sc.year_min);
    sc.year_max = get_or<int>(s, "year_max", sc.year_max);
    sc.base_rate = get_or<double>(s, "base_rate", sc.base_rate);
    sc.trials_rate = get_or<double>(s, "trials_rate", sc.trials_rate);
    sc.signal_strength = get_or<double>(s, "signal_strength", sc.signal_strength);
    sc.missing_abstract_rate = get_or<double>(s, "missing_abstract_rate", sc.missing_abstract_rate);
    p.synth = sc;  // the generator seed is derived from the profile seed at run time
  }
  if (j.contains("filter")) {
    const auto& f = j.at("filter");
    p.filter.year_min = get_or<int>(f, "year_min", p.filter.year_min);
    p.filter.year_max = get_or<int>(f, "year_max", p.filter.year_max);
    p.filter.required_fields =
        get_or<std::vector<std::string>>(f, "required_fields", p.filter.required_fields);
  }
  if (j.contains("split")) {
    const auto& s = j.at("split");
    p.split.train_fraction = get_or<double>(s, "train_fraction", p.split.train_fraction);
    p.split.stratified = get_or<bool>(s, "stratified", p.split.stratified);
  }
  if (j.contains("tiers")) {
    p.tiers.clear();
    for (const auto& t : j.at("tiers")) p.tiers.push_back(tier_from_string(t.get<std::string>()));
    if (p.tiers.empty()) throw ConfigError("profile: tiers must not be empty");
  }
  if (j.contains("gbdt")) {
    const auto& g = j.at("gbdt");
    p.gbdt.iterations = get_or<int>(g, "iterations", p.gbdt.iterations);
    p.gbdt.depth = get_or<int>(g, "depth", p.gbdt.depth);
    p.gbdt.learning_rate = get_or<double>(g, "learning_rate", p.gbdt.learning_rate);
    p.gbdt.l2_leaf_reg = get_or<double>(g, "l2_leaf_reg", p.gbdt.l2_leaf_reg);
    p.gbdt.max_bins = get_or<int>(g, "max_bins", p.gbdt.max_bins);
    p.gbdt.eval_metric =
        eval_metric_from_string(get_or<std::string>(g, "eval_metric", "accuracy"));
    p.gbdt.validation_fraction =
        get_or<double>(g, "validation_fraction", p.gbdt.validation_fraction);
    if (g.contains("early_stopping_rounds") && !g.at("early_stopping_rounds").is_null())
      p.gbdt.early_stopping_rounds = g.at("early_stopping_rounds").get<int>();
  }
  if (j.contains("embedder")) {
    const auto& e = j.at("embedder");
    const std::string mode = get_or<std::string>(e, "mode", "local");
    if (mode == "local") p.embedder.mode = EmbedMode::Local;
    else if (mode == "remote") p.embedder.mode = EmbedMode::Remote;
    else throw ConfigError("embedder.mode must be 'local' or 'remote'");
    p.embedder.endpoint_url = get_or<std::string>(e, "endpoint_url", p.embedder.endpoint_url);
    p.embedder.model_name = get_or<std::string>(e, "model_name", p.embedder.model_name);
    p.embedder.token_env = get_or<std::string>(e, "token_env", p.embedder.token_env);
    p.embedder.dimension = get_or<int>(e, "dimension", p.embedder.dimension);
    p.embedder.max_chars = get_or<int>(e, "max_chars", p.embedder.max_chars);
    p.embedder.max_in_flight = get_or<int>(e, "max_in_flight", p.embedder.max_in_flight);
    p.embedder.request_batch = get_or<int>(e, "request_batch", p.embedder.request_batch);
    if (e.contains("retry")) {
      const auto& r = e.at("retry");
      p.embedder.retry.max_attempts = get_or<int>(r, "max_attempts", p.embedder.retry.max_attempts);
      p.embedder.retry.base_backoff_ms =
          get_or<int>(r, "base_backoff_ms", p.embedder.retry.base_backoff_ms);
    }
  }
  if (j.contains("features")) {
    const auto& f = j.at("features");
    p.features.k_rcdc = get_or<int>(f, "k_rcdc", p.features.k_rcdc);
    p.features.k_rac = get_or<int>(f, "k_rac", p.features.k_rac);
    p.features.k_concepts = get_or<int>(f, "k_concepts", p.features.k_concepts);
    p.features.k_abstract = get_or<int>(f, "k_abstract", p.features.k_abstract);
    p.features.thresholds.default_min_count =
        get_or<int>(f, "default_min_count", p.features.thresholds.default_min_count);
    p.features.thresholds.concepts_min_count =
        get_or<int>(f, "concepts_min_count", p.features.thresholds.concepts_min_count);
    p.features.thresholds.concept_importance_min = get_or<double>(
        f, "concept_importance_min", p.features.thresholds.concept_importance_min);
  }
  if (j.contains("temporal")) {
    const auto& t = j.at("temporal");
    p.temporal.enabled = get_or<bool>(t, "enabled", p.temporal.enabled);
    p.temporal.tier = tier_from_string(get_or<std::string>(t, "tier", "m3"));
    p.temporal.n_per_label = get_or<int>(t, "n_per_label", p.temporal.n_per_label);
    if (t.contains("decades")) {
      p.temporal.decades.clear();
      for (const auto& d : t.at("decades"))
        p.temporal.decades.emplace_back(d.at(0).get<int>(), d.at(1).get<int>());
    }
  }
  if (p.corpus.empty() && !p.synth)
    throw ConfigError("profile needs either a corpus path or a synth block");
  return p;
}

inline nlohmann::json profile_to_json(const ExperimentProfile& p) {
  nlohmann::json j;
  j["name"] = p.name;
  j["corpus"] = p.corpus;
  if (p.synth) {
    j["synth"] = {{"n", p.synth->n},
                  {"year_min", p.synth->year_min},
                  {"year_max", p.synth->year_max},
                  {"base_rate", p.synth->base_rate},
                  {"trials_rate", p.synth->trials_rate},
                  {"signal_strength", p.synth->signal_strength},
                  {"missing_abstract_rate", p.synth->missing_abstract_rate}};
  }
  j["filter"] = {{"year_min", p.filter.year_min},
                 {"year_max", p.filter.year_max},
                 {"required_fields", p.filter.required_fields}};
  j["label"] = to_string(p.label);
  j["downsample_keep"] = p.downsample_keep;
  j["split"] = {{"train_fraction", p.split.train_fraction}, {"stratified", p.split.stratified}};
  std::vector<std::string> tiers;
  for (const auto t : p.tiers) tiers.emplace_back(to_string(t));
  j["tiers"] = tiers;
  nlohmann::json g;
  g["iterations"] = p.gbdt.iterations;
  g["depth"] = p.gbdt.depth;
  g["learning_rate"] = p.gbdt.learning_rate;
  g["l2_leaf_reg"] = p.gbdt.l2_leaf_reg;
  g["max_bins"] = p.gbdt.max_bins;
  g["eval_metric"] = to_string(p.gbdt.eval_metric);
  g["validation_fraction"] = p.gbdt.validation_fraction;
  if (p.gbdt.early_stopping_rounds) g["early_stopping_rounds"] = *p.gbdt.early_stopping_rounds;
  j["gbdt"] = std::move(g);
  j["embedder"] = {{"mode", p.embedder.mode == EmbedMode::Local ? "local" : "remote"},
                   {"endpoint_url", p.embedder.endpoint_url},
                   {"model_name", p.embedder.model_name},
                   {"token_env", p.embedder.token_env},
                   {"dimension", p.embedder.dimension},
                   {"max_chars", p.embedder.max_chars},
                   {"max_in_flight", p.embedder.max_in_flight},
                   {"request_batch", p.embedder.request_batch},
                   {"retry",
                    {{"max_attempts", p.embedder.retry.max_attempts},
                     {"base_backoff_ms", p.embedder.retry.base_backoff_ms}}}};
  j["features"] = {{"k_rcdc", p.features.k_rcdc},
                   {"k_rac", p.features.k_rac},
                   {"k_concepts", p.features.k_concepts},
                   {"k_abstract", p.features.k_abstract},
                   {"default_min_count", p.features.thresholds.default_min_count},
                   {"concepts_min_count", p.features.thresholds.concepts_min_count},
                   {"concept_importance_min", p.features.thresholds.concept_importance_min}};
  nlohmann::json decades = nlohmann::json::array();
  for (const auto& [lo, hi] : p.temporal.decades) decades.push_back({lo, hi});
  j["temporal"] = {{"enabled", p.temporal.enabled},
                   {"tier", to_string(p.temporal.tier)},
                   {"n_per_label", p.temporal.n_per_label},
                   {"decades", std::move(decades)}};
  j["strict"] = p.strict_ingest;
  j["seed"] = p.seed;
  return j;
}

inline ExperimentProfile load_profile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open profile: " + path.string());
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("profile is not valid JSON: " + path.string());
  return profile_from_json(j);
}

inline std::string profile_hash(const ExperimentProfile& p) {
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(fnv1a64(profile_to_json(p).dump())));
  return hex;
}

// -- run context --------------------------------------------------------------

struct RunContext {
  std::filesystem::path run_dir;
  ExperimentProfile profile;
  std::string hash;

  std::filesystem::path corpus_path() const {
    return profile.corpus.empty() ? run_dir / "corpus.jsonl"
                                  : std::filesystem::path(profile.corpus);
  }
  std::filesystem::path cache_path() const {
    return corpus_path().string() + ".embcache.jsonl";
  }

  nlohmann::json provenance(const std::string& stage) const {
    return {{"profile_hash", hash},
            {"seed", profile.seed},
            {"stage", stage},
            {"stage_version", kStageVersion}};
  }
  std::vector<std::string> provenance_lines(const std::string& stage) const {
    return {"profile_hash=" + hash + " seed=" + std::to_string(profile.seed) + " stage=" + stage +
            " stage_version=" + std::to_string(kStageVersion)};
  }

  void log(const std::string& message) const {
    std::ofstream out(run_dir / "log.txt", std::ios::app);
    const std::time_t now = std::time(nullptr);
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%S", std::gmtime(&now));
    out << stamp << " " << message << '\n';
  }
};

namespace pipeline_detail {

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write: " + path.string());
  out << j.dump(2) << '\n';
}

inline nlohmann::json read_json(const std::filesystem::path& path, const std::string& stage) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact(stage, path.string());
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw DataError("corrupt artifact: " + path.string());
  return j;
}

inline void require_artifact(const std::filesystem::path& path, const std::string& stage) {
  if (!std::filesystem::exists(path)) throw MissingArtifact(stage, path.string());
}

inline std::string tier_file(Tier t, const char* suffix) {
  return std::string(to_string(t)) + suffix;
}

}  // namespace pipeline_detail

/// Create (or re-open) a run directory and pin the resolved profile in it.
/// Reusing a directory with a different profile is an error.
inline RunContext init_run(const ExperimentProfile& profile,
                           const std::filesystem::path& run_dir) {
  RunContext ctx{run_dir, profile, profile_hash(profile)};
  std::filesystem::create_directories(run_dir);
  const auto profile_path = run_dir / "profile.json";
  nlohmann::json snapshot = profile_to_json(profile);
  snapshot["profile_hash"] = ctx.hash;
  if (std::filesystem::exists(profile_path)) {
    const auto existing = pipeline_detail::read_json(profile_path, "init");
    if (existing.value("profile_hash", "") != ctx.hash)
      throw ConfigError("run directory " + run_dir.string() +
                        " was created with a different profile");
  } else {
    pipeline_detail::write_json(profile_path, snapshot);
  }
  return ctx;
}

inline void stage_synth(RunContext& ctx) {
  if (!ctx.profile.synth) {
    if (ctx.profile.corpus.empty())
      throw ConfigError("profile has neither a corpus path nor a synth block");
    return;  // external corpus; nothing to synthesize
  }
  SynthConfig cfg = *ctx.profile.synth;
  cfg.seed = derive_seed(ctx.profile.seed, "synth");
  const auto records = synth_corpus(cfg);
  write_corpus(ctx.corpus_path(), records);
  ctx.log("synth: wrote " + std::to_string(records.size()) + " records");
}

inline void stage_ingest(RunContext& ctx) {
  namespace pd = pipeline_detail;
  const auto corpus_file = ctx.corpus_path();
  if (!std::filesystem::exists(corpus_file))
    throw MissingArtifact("synth", corpus_file.string());
  const auto dir = ctx.run_dir / "ingest";
  std::filesystem::create_directories(dir);

  const auto loaded = load_corpus(corpus_file, ctx.profile.strict_ingest);
  auto filtered = filter_corpus(loaded.records, ctx.profile.filter);

  nlohmann::json report;
  report["provenance"] = ctx.provenance("ingest");
  report["loaded"] = loaded.records.size();
  report["skipped_lines"] = loaded.skipped;
  report["insufficient_data"] = filtered.report.insufficient_data;
  report["out_of_window"] = filtered.report.out_of_window;
  report["kept"] = filtered.kept.size();
  pd::write_json(dir / "filter_report.json", report);
  write_corpus(dir / "filtered.jsonl", filtered.kept);

  auto labeled = assign_labels(filtered.kept, ctx.profile.label);
  std::size_t pos = 0;
  for (const int y : labeled.labels) pos += y == 1;

  auto rebalanced =
      downsample_majority(labeled, ctx.profile.downsample_keep,
                          derive_seed(ctx.profile.seed, "downsample"));
  SplitConfig split_cfg;
  split_cfg.train_fraction = ctx.profile.split.train_fraction;
  split_cfg.downsample_keep = ctx.profile.downsample_keep;
  split_cfg.stratified = ctx.profile.split.stratified;
  split_cfg.seed = derive_seed(ctx.profile.seed, "split");
  const auto split = train_test_split(rebalanced, split_cfg);
  write_corpus(dir / "rebalanced.jsonl", rebalanced.records);

  SplitManifest manifest;
  manifest.seed = split_cfg.seed;
  manifest.downsample_keep = ctx.profile.downsample_keep;
  manifest.train_fraction = split_cfg.train_fraction;
  manifest.label_kind = to_string(ctx.profile.label);
  for (const auto& r : split.train.records) manifest.train_ids.push_back(r.id);
  for (const auto& r : split.test.records) manifest.test_ids.push_back(r.id);
  nlohmann::json mj = split_manifest_to_json(manifest);
  mj["provenance"] = ctx.provenance("ingest");
  pd::write_json(dir / "split_manifest.json", mj);

  // Descriptive statistics over the filtered corpus.
  nlohmann::json stats;
  stats["provenance"] = ctx.provenance("ingest");
  stats["label_kind"] = to_string(ctx.profile.label);
  stats["positives"] = pos;
  stats["negatives"] = labeled.labels.size() - pos;
  std::size_t rebal_pos = 0;
  for (const int y : rebalanced.labels) rebal_pos += y == 1;
  stats["rebalanced_positives"] = rebal_pos;
  stats["rebalanced_negatives"] = rebalanced.labels.size() - rebal_pos;
  try {
    const auto delays = delay_stats(filtered.kept, ctx.profile.label);
    stats["delay_mean_years"] = delays.mean_years;
    stats["delay_std_years"] = delays.std_years;
  } catch (const EmptyInput&) {
    // no cited records in window; nothing to report
  }
  const auto groups = times_cited_by_label(filtered.kept, ctx.profile.label);
  if (groups.first.size() >= 2 && groups.second.size() >= 2) {
    try {
      const auto welch = citation_gap_welch_t(groups.first, groups.second);
      stats["citation_gap"] = {{"t", welch.t}, {"df", welch.df}, {"p_two_sided", welch.p_two_sided}};
    } catch (const DegenerateInput&) {
    }
  }
  pd::write_json(dir / "stats.json", stats);
  ctx.log("ingest: kept " + std::to_string(filtered.kept.size()) + ", rebalanced " +
          std::to_string(rebalanced.records.size()));
}

namespace pipeline_detail {

struct PartitionedData {
  LabeledDataset rebalanced;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  SplitManifest manifest;
};

inline PartitionedData load_partition(const RunContext& ctx) {
  const auto dir = ctx.run_dir / "ingest";
  require_artifact(dir / "rebalanced.jsonl", "ingest");
  require_artifact(dir / "split_manifest.json", "ingest");
  PartitionedData out;
  out.rebalanced =
      assign_labels(load_corpus(dir / "rebalanced.jsonl", true).records, ctx.profile.label);
  out.manifest = split_manifest_from_json(read_json(dir / "split_manifest.json", "ingest"));
  const std::set<std::string> train_ids(out.manifest.train_ids.begin(),
                                        out.manifest.train_ids.end());
  const std::set<std::string> test_ids(out.manifest.test_ids.begin(),
                                       out.manifest.test_ids.end());
  for (std::size_t i = 0; i < out.rebalanced.records.size(); ++i) {
    const auto& id = out.rebalanced.records[i].id;
    if (train_ids.count(id)) out.train_rows.push_back(i);
    else if (test_ids.count(id)) out.test_rows.push_back(i);
  }
  return out;
}

template <class Picker>
inline std::vector<PublicationRecord> pick_records(const LabeledDataset& ds, const Picker& rows) {
  std::vector<PublicationRecord> out;
  out.reserve(rows.size());
  for (const auto i : rows) out.push_back(ds.records[i]);
  return out;
}

inline std::vector<std::string> abstracts_of(const std::vector<PublicationRecord>& records) {
  std::vector<std::string> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.abstract.value_or(""));
  return out;
}

inline bool needs_abstract_tier(const std::vector<Tier>& tiers) {
  return std::find(tiers.begin(), tiers.end(), Tier::M3) != tiers.end();
}

}  // namespace pipeline_detail

inline void stage_featurize(RunContext& ctx) {
  namespace pd = pipeline_detail;
  const auto part = pd::load_partition(ctx);
  const auto dir = ctx.run_dir / "features";
  std::filesystem::create_directories(dir);

  const auto train_records = pd::pick_records(part.rebalanced, part.train_rows);
  const auto test_records = pd::pick_records(part.rebalanced, part.test_rows);

  EmbedderConfig ecfg = ctx.profile.embedder;
  ecfg.seed = derive_seed(ctx.profile.seed, "embed");
  const bool with_abstract = pd::needs_abstract_tier(ctx.profile.tiers);
  std::vector<EmbeddingVector> train_emb, test_emb;
  if (with_abstract) {
    EmbeddingCache cache;
    cache.load(ctx.cache_path());
    train_emb = embed_batch_cached(pd::abstracts_of(train_records), ecfg, cache);
    test_emb = embed_batch_cached(pd::abstracts_of(test_records), ecfg, cache);
    cache.save(ctx.cache_path());
  }

  FeatureConfig fcfg = ctx.profile.features;
  fcfg.seed = derive_seed(ctx.profile.seed, "features");
  const auto models =
      fit_feature_models(train_records, with_abstract ? &train_emb : nullptr, fcfg, with_abstract);

  nlohmann::json vj = vocab_to_json(models.vocab);
  vj["provenance"] = ctx.provenance("featurize");
  pd::write_json(dir / "vocab.json", vj);
  for (const auto& [block, model] : models.tsvd) {
    nlohmann::json tj = tsvd_to_json(model);
    tj["provenance"] = ctx.provenance("featurize");
    pd::write_json(dir / ("tsvd_" + block + ".json"), tj);
  }

  for (const auto tier : ctx.profile.tiers) {
    const auto emit = [&](const std::vector<PublicationRecord>& records,
                          const std::vector<EmbeddingVector>* emb, const char* part_name) {
      const auto fm = assemble(records, models.vocab, models.tsvd, emb, tier);
      if (const auto violations = leakage_guard(fm); !violations.empty()) {
        std::string joined;
        for (const auto& v : violations) joined += (joined.empty() ? "" : ", ") + v;
        throw LeakageViolation(joined);
      }
      const std::string base = std::string(to_string(tier)) + "_" + part_name;
      write_feature_csv(fm, dir / (base + ".csv"), ctx.provenance_lines("featurize"));
      nlohmann::json manifest = feature_manifest(fm, models.tsvd, models.vocab);
      manifest["provenance"] = ctx.provenance("featurize");
      write_feature_manifest(manifest, dir / (base + ".manifest.json"));
    };
    emit(train_records, with_abstract && tier == Tier::M3 ? &train_emb : nullptr, "train");
    emit(test_records, with_abstract && tier == Tier::M3 ? &test_emb : nullptr, "test");
  }
  ctx.log("featurize: wrote matrices for " + std::to_string(ctx.profile.tiers.size()) + " tiers");
}

inline void stage_train(RunContext& ctx) {
  namespace pd = pipeline_detail;
  const auto part = pd::load_partition(ctx);
  const auto fdir = ctx.run_dir / "features";
  const auto mdir = ctx.run_dir / "models";
  std::filesystem::create_directories(mdir);

  std::vector<int> y_train;
  y_train.reserve(part.train_rows.size());
  for (const auto i : part.train_rows) y_train.push_back(part.rebalanced.labels[i]);

  for (const auto tier : ctx.profile.tiers) {
    const std::string base = pd::tier_file(tier, "_train");
    pd::require_artifact(fdir / (base + ".csv"), "featurize");
    pd::require_artifact(fdir / (base + ".manifest.json"), "featurize");
    const auto fm = read_feature_csv(fdir / (base + ".csv"), fdir / (base + ".manifest.json"));
    GbdtConfig gcfg = ctx.profile.gbdt;
    gcfg.seed = derive_seed(ctx.profile.seed, std::string("gbdt-") + to_string(tier));
    const auto model = fit(fm, y_train, gcfg);
    nlohmann::json mj = model_to_json(model);
    mj["provenance"] = ctx.provenance("train");
    pd::write_json(mdir / (std::string(to_string(tier)) + ".json"), mj);
    ctx.log(std::string("train: ") + to_string(tier) + " best_iteration " +
            std::to_string(model.best_iteration));
  }
}

inline void stage_eval(RunContext& ctx) {
  namespace pd = pipeline_detail;
  const auto part = pd::load_partition(ctx);
  const auto fdir = ctx.run_dir / "features";
  const auto mdir = ctx.run_dir / "models";
  const auto edir = ctx.run_dir / "eval";
  std::filesystem::create_directories(edir);

  std::vector<int> y_test;
  y_test.reserve(part.test_rows.size());
  for (const auto i : part.test_rows) y_test.push_back(part.rebalanced.labels[i]);

  for (const auto tier : ctx.profile.tiers) {
    const std::string base = pd::tier_file(tier, "_test");
    pd::require_artifact(fdir / (base + ".csv"), "featurize");
    const auto model_path = mdir / (std::string(to_string(tier)) + ".json");
    pd::require_artifact(model_path, "train");
    const auto fm = read_feature_csv(fdir / (base + ".csv"), fdir / (base + ".manifest.json"));
    const auto model = load_model(model_path);
    const auto probs = predict_proba(model, fm);
    const auto report = evaluate(y_test, probs);

    nlohmann::json rj = eval_report_to_json(report);
    rj["provenance"] = ctx.provenance("eval");
    rj["tier"] = to_string(tier);
    rj["label"] = to_string(ctx.profile.label);
    pd::write_json(edir / (std::string(to_string(tier)) + "_report.json"), rj);
    write_curve_csv(report.roc_points, "fpr", "tpr",
                    edir / (std::string(to_string(tier)) + "_roc.csv"),
                    ctx.provenance_lines("eval"));
    write_curve_csv(report.pr_points, "recall", "precision",
                    edir / (std::string(to_string(tier)) + "_pr.csv"),
                    ctx.provenance_lines("eval"));
    char line[160];
    std::snprintf(line, sizeof(line), "eval: %s auc %.4f accuracy %.4f", to_string(tier),
                  report.auc_roc, report.metrics.accuracy);
    ctx.log(line);
  }
}

inline void stage_temporal(RunContext& ctx) {
  namespace pd = pipeline_detail;
  if (!ctx.profile.temporal.enabled) return;
  if (std::find(ctx.profile.tiers.begin(), ctx.profile.tiers.end(), ctx.profile.temporal.tier) ==
      ctx.profile.tiers.end())
    throw ConfigError(std::string("temporal audit tier ") + to_string(ctx.profile.temporal.tier) +
                      " is not among the profile's tiers");
  const auto idir = ctx.run_dir / "ingest";
  const auto fdir = ctx.run_dir / "features";
  const auto tdir = ctx.run_dir / "temporal";
  pd::require_artifact(idir / "filtered.jsonl", "ingest");
  pd::require_artifact(idir / "split_manifest.json", "ingest");
  const Tier tier = ctx.profile.temporal.tier;
  const auto model_path = ctx.run_dir / "models" / (std::string(to_string(tier)) + ".json");
  pd::require_artifact(model_path, "train");
  pd::require_artifact(fdir / "vocab.json", "featurize");
  std::filesystem::create_directories(tdir);

  const auto pool =
      assign_labels(load_corpus(idir / "filtered.jsonl", true).records, ctx.profile.label);
  const auto manifest =
      split_manifest_from_json(pd::read_json(idir / "split_manifest.json", "ingest"));
  const std::set<std::string> test_ids(manifest.test_ids.begin(), manifest.test_ids.end());

  const auto sample =
      sample_per_year(pool, test_ids, ctx.profile.filter.year_min, ctx.profile.filter.year_max,
                      ctx.profile.temporal.n_per_label, derive_seed(ctx.profile.seed, "temporal"));

  const auto vocab = vocab_from_json(pd::read_json(fdir / "vocab.json", "featurize"));
  std::map<std::string, TsvdModel> tsvd_models;
  for (const auto& block : {"category_rcdc", "category_hracs_rac", "concepts", "abstract"}) {
    const auto path = fdir / (std::string("tsvd_") + block + ".json");
    if (std::filesystem::exists(path))
      tsvd_models[block] = tsvd_from_json(pd::read_json(path, "featurize"));
  }

  std::vector<PublicationRecord> sampled = pd::pick_records(pool, sample.indices);
  std::vector<EmbeddingVector> embeddings;
  const std::vector<EmbeddingVector>* emb_ptr = nullptr;
  if (tier == Tier::M3) {
    EmbedderConfig ecfg = ctx.profile.embedder;
    ecfg.seed = derive_seed(ctx.profile.seed, "embed");
    EmbeddingCache cache;
    cache.load(ctx.cache_path());
    embeddings = embed_batch_cached(pd::abstracts_of(sampled), ecfg, cache);
    cache.save(ctx.cache_path());
    emb_ptr = &embeddings;
  }
  const auto fm = assemble(sampled, vocab, tsvd_models, emb_ptr, tier);
  const auto model = load_model(model_path);
  const auto points = delta_labels(model, fm, pool, sample);
  const auto decades = decade_confusions(points, ctx.profile.temporal.decades);

  write_delta_csv(points, tdir / "delta.csv", ctx.provenance_lines("temporal"));
  nlohmann::json dj;
  dj["provenance"] = ctx.provenance("temporal");
  dj["tier"] = to_string(tier);
  dj["decades"] = decades_to_json(decades);
  pd::write_json(tdir / "decades.json", dj);
  nlohmann::json sj;
  sj["provenance"] = ctx.provenance("temporal");
  auto shortfalls = nlohmann::json::array();
  for (const auto& s : sample.shortfalls)
    shortfalls.push_back(
        {{"year", s.year}, {"label", s.label}, {"requested", s.requested}, {"taken", s.taken}});
  sj["shortfalls"] = std::move(shortfalls);
  sj["points"] = points.size();
  pd::write_json(tdir / "shortfalls.json", sj);
  {
    std::ofstream svg(tdir / "delta.svg");
    svg << render_delta_svg(points, ctx.profile.filter.year_min, ctx.profile.filter.year_max,
                            ctx.provenance_lines("temporal").front());
  }
  ctx.log("temporal: " + std::to_string(points.size()) + " points, " +
          std::to_string(sample.shortfalls.size()) + " shortfalls");
}

inline void stage_report(RunContext& ctx, std::ostream& out = std::cout) {
  namespace pd = pipeline_detail;
  const auto edir = ctx.run_dir / "eval";
  const auto rdir = ctx.run_dir / "report";
  std::filesystem::create_directories(rdir);

  std::vector<CurveSeries> roc_series, pr_series;
  std::string table;
  char buf[256];
  for (const auto tier : ctx.profile.tiers) {
    const std::string name = to_string(tier);
    pd::require_artifact(edir / (name + "_report.json"), "eval");
    const auto report = pd::read_json(edir / (name + "_report.json"), "eval");
    roc_series.push_back({name, read_curve_csv(edir / (name + "_roc.csv"))});
    pr_series.push_back({name, read_curve_csv(edir / (name + "_pr.csv"))});

    const auto& cm = report.at("confusion");
    const std::string label = report.value("label", std::string(to_string(ctx.profile.label)));
    std::snprintf(buf, sizeof(buf), "model %s (label %s)\n", name.c_str(), label.c_str());
    table += buf;
    auto pct = [&report](const char* key) -> std::string {
      if (!report.contains(key)) return "   n/a";
      char v[32];
      std::snprintf(v, sizeof(v), "%6.2f%%", report.at(key).get<double>() * 100.0);
      return v;
    };
    std::snprintf(buf, sizeof(buf),
                  "  accuracy %s   precision %s   recall %s   f1 %s   lift %s   auc %.2f\n",
                  pct("accuracy").c_str(), pct("precision").c_str(), pct("recall").c_str(),
                  pct("f1").c_str(), pct("lift").c_str(), report.at("auc_roc").get<double>());
    table += buf;
    std::snprintf(buf, sizeof(buf),
                  "  confusion            predicted 0   predicted 1\n"
                  "    true 0             %11lld   %11lld\n"
                  "    true 1             %11lld   %11lld\n",
                  cm.at("tn").get<long long>(), cm.at("fp").get<long long>(),
                  cm.at("fn").get<long long>(), cm.at("tp").get<long long>());
    table += buf;
  }
  const std::string comment = ctx.provenance_lines("report").front();
  {
    std::ofstream svg(rdir / "roc_overlay.svg");
    svg << render_curves_svg("ROC curves", "false positive rate", "true positive rate",
                             roc_series, comment);
  }
  {
    std::ofstream svg(rdir / "pr_overlay.svg");
    svg << render_curves_svg("Precision-recall curves", "recall", "precision", pr_series,
                             comment);
  }
  {
    std::ofstream txt(rdir / "metrics.txt");
    txt << "# " << comment << '\n' << table;
  }
  out << table;
  ctx.log("report: wrote overlays and metrics table");
}

/// Execute every stage in order.
inline void run_pipeline(RunContext& ctx, std::ostream& out = std::cout) {
  stage_synth(ctx);
  stage_ingest(ctx);
  stage_featurize(ctx);
  stage_train(ctx);
  stage_eval(ctx);
  stage_temporal(ctx);
  stage_report(ctx, out);
}

}  // namespace tip
