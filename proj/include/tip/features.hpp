#pragma once

// Feature assembly for the three model tiers:
//   M1  metadata only (numeric fields, hashed identifier fields, one-hot
//       categoricals; the wide rcdc/rac category blocks are TSVD-reduced)
//   M2  M1 + TSVD-reduced concept one-hot block
//   M3  M2 + TSVD-reduced abstract-embedding block
//
// Vocabularies are frequency-thresholded: concepts need twenty occurrences
// and an importance score above the cutoff, other categoricals need five.
// High-cardinality name fields bucket below-threshold values into a shared
// "<other>" column. The four time-dependent leakage metrics cannot appear
// here at all: they live outside the record fields this module reads, and
// leakage_guard rejects any matrix that names them.

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "tip/embed.hpp"
#include "tip/errors.hpp"
#include "tip/matrix.hpp"
#include "tip/record.hpp"
#include "tip/rng.hpp"
#include "tip/tsvd.hpp"

namespace tip {

inline constexpr std::array<std::string_view, 4> kLeakageColumns = {
    "recent_citations", "altmetric", "relative_citation_ratio", "times_cited"};

inline constexpr const char* kOtherCategory = "<other>";

// -- field tables -----------------------------------------------------------

/// Scalar categorical fields, in assembly order.
inline const std::vector<std::string>& scalar_categorical_fields() {
  static const std::vector<std::string> v = {
      "open_access", "first_author_affiliation_country", "first_author_name",
      "first_author_affiliation_name", "journal_title"};
  return v;
}

/// List-valued categorical fields that stay one-hot (no reduction).
inline const std::vector<std::string>& plain_list_fields() {
  static const std::vector<std::string> v = {
      "category_hra", "funders", "funder_countries", "research_org_names",
      "research_org_country_names"};
  return v;
}

/// List-valued categorical fields whose one-hot blocks are TSVD-reduced.
inline const std::vector<std::string>& reduced_list_fields() {
  static const std::vector<std::string> v = {"category_rcdc", "category_hracs_rac"};
  return v;
}

inline bool is_list_field(std::string_view field) {
  return field == "concepts" || field == "category_rcdc" || field == "category_hra" ||
         field == "category_hracs_rac" || field == "funders" || field == "funder_countries" ||
         field == "research_org_names" || field == "research_org_country_names";
}

/// Category values a record carries for a vocabulary field.
inline std::vector<std::string> field_values(const PublicationRecord& r, std::string_view field) {
  if (field == "concepts") {
    std::vector<std::string> v;
    v.reserve(r.concepts.size());
    for (const auto& c : r.concepts) v.push_back(c.term);
    return v;
  }
  if (field == "category_rcdc") return r.category_rcdc;
  if (field == "category_hra") return r.category_hra;
  if (field == "category_hracs_rac") return r.category_hracs_rac;
  if (field == "funders") return r.funders;
  if (field == "funder_countries") return r.funder_countries;
  if (field == "research_org_names") return r.research_org_names;
  if (field == "research_org_country_names") return r.research_org_country_names;
  if (field == "open_access") return {to_string(r.open_access)};
  if (field == "first_author_name")
    return r.first_author_name.empty() ? std::vector<std::string>{} : std::vector<std::string>{r.first_author_name};
  if (field == "first_author_affiliation_country")
    return r.first_author_affiliation_country.empty()
               ? std::vector<std::string>{}
               : std::vector<std::string>{r.first_author_affiliation_country};
  if (field == "first_author_affiliation_name")
    return r.first_author_affiliation_name.empty()
               ? std::vector<std::string>{}
               : std::vector<std::string>{r.first_author_affiliation_name};
  if (field == "journal_title")
    return r.journal_title.empty() ? std::vector<std::string>{} : std::vector<std::string>{r.journal_title};
  throw UnknownField(std::string(field));
}

// -- vocabulary -------------------------------------------------------------

struct VocabThresholds {
  int default_min_count = 5;
  int concepts_min_count = 20;
  double concept_importance_min = 0.4;
  std::map<std::string, int> min_count_override;  // per-field override
  std::set<std::string> other_bucket_fields = {"first_author_name", "journal_title",
                                               "first_author_affiliation_name"};

  int min_count_for(const std::string& field) const {
    const auto it = min_count_override.find(field);
    if (it != min_count_override.end()) return it->second;
    return field == "concepts" ? concepts_min_count : default_min_count;
  }
};

struct VocabSpec {
  std::map<std::string, std::vector<std::string>> vocab;  // field -> ordered categories
  VocabThresholds thresholds;

  const std::vector<std::string>& categories(const std::string& field) const {
    const auto it = vocab.find(field);
    if (it == vocab.end()) throw UnknownField(field);
    return it->second;
  }
};

/// Build per-field vocabularies from the fitting records. Categories are kept
/// when they occur at least min_count times (concepts additionally need an
/// importance score >= concept_importance_min in at least one occurrence) and
/// ordered by (count desc, term asc). Fields configured with an "<other>"
/// bucket get it as the last category.
inline VocabSpec build_vocab(const std::vector<PublicationRecord>& fit_records,
                             const VocabThresholds& thresholds = {}) {
  VocabSpec spec;
  spec.thresholds = thresholds;

  std::vector<std::string> fields;
  fields.push_back("concepts");
  for (const auto& f : reduced_list_fields()) fields.push_back(f);
  for (const auto& f : plain_list_fields()) fields.push_back(f);
  for (const auto& f : scalar_categorical_fields()) fields.push_back(f);

  for (const auto& field : fields) {
    std::map<std::string, std::size_t> counts;
    std::map<std::string, double> max_importance;
    for (const auto& r : fit_records) {
      if (field == "concepts") {
        for (const auto& c : r.concepts) {
          ++counts[c.term];
          auto& mi = max_importance[c.term];
          mi = std::max(mi, c.importance);
        }
      } else {
        for (const auto& v : field_values(r, field)) ++counts[v];
      }
    }
    const int min_count = thresholds.min_count_for(field);
    std::vector<std::pair<std::string, std::size_t>> kept;
    for (const auto& [term, count] : counts) {
      if (count < static_cast<std::size_t>(min_count)) continue;
      if (field == "concepts" && max_importance[term] < thresholds.concept_importance_min)
        continue;
      kept.emplace_back(term, count);
    }
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    auto& out = spec.vocab[field];
    out.reserve(kept.size() + 1);
    for (auto& [term, count] : kept) out.push_back(std::move(term));
    if (thresholds.other_bucket_fields.count(field)) out.push_back(kOtherCategory);
  }
  return spec;
}

/// One-hot block for a field: cell (i, j) is 1 iff record i carries vocabulary
/// category j. List fields may set several cells per row; out-of-vocabulary
/// values contribute nothing unless the field has an "<other>" bucket.
inline Matrix one_hot(const std::vector<PublicationRecord>& records, const VocabSpec& vocab,
                      const std::string& field) {
  const auto& cats = vocab.categories(field);
  std::map<std::string_view, std::size_t> index;
  for (std::size_t j = 0; j < cats.size(); ++j) index.emplace(cats[j], j);
  const bool has_other = !cats.empty() && cats.back() == kOtherCategory;
  const std::size_t other_col = cats.empty() ? 0 : cats.size() - 1;

  Matrix out(records.size(), cats.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    for (const auto& value : field_values(records[i], field)) {
      const auto it = index.find(value);
      if (it != index.end())
        out(i, it->second) = 1.0;
      else if (has_other)
        out(i, other_col) = 1.0;
    }
  }
  return out;
}

// -- feature matrix ---------------------------------------------------------

enum class BlockTag { Metadata, Concepts, Abstract };
enum class Tier { M1, M2, M3 };

inline const char* to_string(BlockTag t) {
  switch (t) {
    case BlockTag::Metadata: return "metadata";
    case BlockTag::Concepts: return "concepts";
    case BlockTag::Abstract: return "abstract";
  }
  return "metadata";
}

inline const char* to_string(Tier t) {
  switch (t) {
    case Tier::M1: return "m1";
    case Tier::M2: return "m2";
    case Tier::M3: return "m3";
  }
  return "m1";
}

inline Tier tier_from_string(std::string_view s) {
  if (s == "m1" || s == "M1") return Tier::M1;
  if (s == "m2" || s == "M2") return Tier::M2;
  if (s == "m3" || s == "M3") return Tier::M3;
  throw ConfigError("unknown tier: " + std::string(s));
}

struct FeatureMatrix {
  Matrix values;
  std::vector<std::string> column_names;
  std::vector<BlockTag> column_blocks;
  Tier tier = Tier::M1;
};

/// Columns whose names collide with the leakage group. Violations are data,
/// not exceptions; the pipeline aborts when the list is non-empty. The check
/// is by exact name: a renamed copy is out of its scope.
inline std::vector<std::string> leakage_guard(const FeatureMatrix& matrix) {
  std::vector<std::string> violations;
  for (const auto& name : matrix.column_names)
    for (const auto leak : kLeakageColumns)
      if (name == leak) violations.push_back(name);
  return violations;
}

inline nlohmann::json vocab_to_json(const VocabSpec& spec) {
  nlohmann::json j;
  nlohmann::json vocab;
  for (const auto& [field, cats] : spec.vocab) vocab[field] = cats;
  j["vocab"] = std::move(vocab);
  nlohmann::json t;
  t["default_min_count"] = spec.thresholds.default_min_count;
  t["concepts_min_count"] = spec.thresholds.concepts_min_count;
  t["concept_importance_min"] = spec.thresholds.concept_importance_min;
  t["min_count_override"] = spec.thresholds.min_count_override;
  t["other_bucket_fields"] =
      std::vector<std::string>(spec.thresholds.other_bucket_fields.begin(),
                               spec.thresholds.other_bucket_fields.end());
  j["thresholds"] = std::move(t);
  return j;
}

inline VocabSpec vocab_from_json(const nlohmann::json& j) {
  VocabSpec spec;
  for (const auto& [field, cats] : j.at("vocab").items())
    spec.vocab[field] = cats.get<std::vector<std::string>>();
  const auto& t = j.at("thresholds");
  spec.thresholds.default_min_count = t.at("default_min_count").get<int>();
  spec.thresholds.concepts_min_count = t.at("concepts_min_count").get<int>();
  spec.thresholds.concept_importance_min = t.at("concept_importance_min").get<double>();
  spec.thresholds.min_count_override =
      t.at("min_count_override").get<std::map<std::string, int>>();
  const auto other = t.at("other_bucket_fields").get<std::vector<std::string>>();
  spec.thresholds.other_bucket_fields.clear();
  spec.thresholds.other_bucket_fields.insert(other.begin(), other.end());
  return spec;
}

struct FeatureConfig {
  int k_rcdc = 32;
  int k_rac = 32;
  int k_concepts = 64;
  int k_abstract = 64;
  VocabThresholds thresholds;
  std::uint64_t seed = 0;
};

/// Vocabulary plus per-block TSVD models, fitted on the training partition
/// only and applied everywhere.
struct FeatureModels {
  VocabSpec vocab;
  std::map<std::string, TsvdModel> tsvd;  // keys: category_rcdc, category_hracs_rac, concepts, abstract
};

namespace feature_detail {

inline double hashed_id_feature(const std::string& id) {
  return static_cast<double>(fnv1a32(id));
}

inline int capped_k(int requested, std::size_t n, std::size_t m) {
  return static_cast<int>(
      std::min<std::size_t>(static_cast<std::size_t>(std::max(requested, 1)), std::min(n, m)));
}

struct Block {
  Matrix values;
  std::vector<std::string> names;
  BlockTag tag = BlockTag::Metadata;
};

inline void append_block(FeatureMatrix& fm, std::vector<Block>& blocks) {
  std::size_t total = 0;
  for (const auto& b : blocks) total += b.values.cols();
  const std::size_t rows = blocks.empty() ? 0 : blocks.front().values.rows();
  fm.values = Matrix(rows, total);
  fm.column_names.clear();
  fm.column_blocks.clear();
  std::size_t at = 0;
  for (const auto& b : blocks) {
    for (std::size_t j = 0; j < b.values.cols(); ++j) {
      fm.column_names.push_back(b.names[j]);
      fm.column_blocks.push_back(b.tag);
    }
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < b.values.cols(); ++j) fm.values(i, at + j) = b.values(i, j);
    at += b.values.cols();
  }
}

inline Block reduced_or_raw(const Matrix& onehot, const std::string& field,
                            const std::map<std::string, TsvdModel>& models,
                            const VocabSpec& vocab, BlockTag tag) {
  Block b;
  b.tag = tag;
  const auto it = models.find(field);
  if (it != models.end()) {
    b.values = apply_tsvd(it->second, onehot);
    for (std::size_t j = 0; j < b.values.cols(); ++j)
      b.names.push_back(field + "_svd_" + std::to_string(j));
  } else {
    b.values = onehot;
    for (const auto& cat : vocab.categories(field)) b.names.push_back(field + "=" + cat);
  }
  return b;
}

}  // namespace feature_detail

/// Fit vocabulary and TSVD reduction models on the training records.
/// Embeddings are needed only when an M3 assembly will follow.
inline FeatureModels fit_feature_models(const std::vector<PublicationRecord>& train_records,
                                        const std::vector<EmbeddingVector>* train_embeddings,
                                        const FeatureConfig& config, bool with_abstract_block) {
  if (train_records.empty()) throw EmptyInput("fit_feature_models: no training records");
  FeatureModels models;
  models.vocab = build_vocab(train_records, config.thresholds);

  const auto fit_block = [&](const std::string& field, int k) {
    const Matrix block = one_hot(train_records, models.vocab, field);
    if (block.cols() == 0) return;
    const int k_eff = feature_detail::capped_k(k, block.rows(), block.cols());
    models.tsvd[field] = fit_tsvd(block, k_eff, derive_seed(config.seed, "tsvd-" + field), field);
  };
  fit_block("category_rcdc", config.k_rcdc);
  fit_block("category_hracs_rac", config.k_rac);
  fit_block("concepts", config.k_concepts);

  if (with_abstract_block) {
    if (train_embeddings == nullptr || train_embeddings->size() != train_records.size())
      throw MissingEmbedding(train_records.empty() ? "<none>" : train_records.front().id);
    const std::size_t dim = train_embeddings->empty() ? 0 : train_embeddings->front().size();
    Matrix emb(train_records.size(), dim);
    for (std::size_t i = 0; i < train_embeddings->size(); ++i) {
      if ((*train_embeddings)[i].size() != dim) throw MissingEmbedding(train_records[i].id);
      for (std::size_t j = 0; j < dim; ++j) emb(i, j) = (*train_embeddings)[i][j];
    }
    const int k_eff = feature_detail::capped_k(config.k_abstract, emb.rows(), emb.cols());
    models.tsvd["abstract"] =
        fit_tsvd(emb, k_eff, derive_seed(config.seed, "tsvd-abstract"), "abstract");
  }
  return models;
}

/// Assemble the feature matrix for a tier. Column order is deterministic:
/// numeric metadata, hashed identifiers, scalar one-hots, plain list one-hots,
/// reduced category blocks, then the concept and abstract blocks by tier.
inline FeatureMatrix assemble(const std::vector<PublicationRecord>& records,
                              const VocabSpec& vocab,
                              const std::map<std::string, TsvdModel>& tsvd_models,
                              const std::vector<EmbeddingVector>* embeddings, Tier tier) {
  using feature_detail::Block;
  FeatureMatrix fm;
  fm.tier = tier;
  std::vector<Block> blocks;

  {
    Block numeric;
    numeric.tag = BlockTag::Metadata;
    numeric.names = {"reference_ids_count", "authors_count", "research_org_names_count",
                     "research_org_country_names_count"};
    numeric.values = Matrix(records.size(), numeric.names.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto& r = records[i];
      numeric.values(i, 0) = r.reference_ids_count;
      numeric.values(i, 1) = r.authors_count;
      numeric.values(i, 2) = r.research_org_names_count;
      numeric.values(i, 3) = r.research_org_country_names_count;
    }
    blocks.push_back(std::move(numeric));
  }
  {
    // Table-marked numeric identifiers: hashed to a stable 32-bit integer.
    Block hashed;
    hashed.tag = BlockTag::Metadata;
    hashed.names = {"first_author_id_hash", "first_author_affiliation_id_hash", "journal_id_hash"};
    hashed.values = Matrix(records.size(), hashed.names.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto& r = records[i];
      hashed.values(i, 0) = feature_detail::hashed_id_feature(r.first_author_id);
      hashed.values(i, 1) = feature_detail::hashed_id_feature(r.first_author_affiliation_id);
      hashed.values(i, 2) = feature_detail::hashed_id_feature(r.journal_id);
    }
    blocks.push_back(std::move(hashed));
  }
  for (const auto& field : scalar_categorical_fields()) {
    Block b;
    b.tag = BlockTag::Metadata;
    b.values = one_hot(records, vocab, field);
    for (const auto& cat : vocab.categories(field)) b.names.push_back(field + "=" + cat);
    blocks.push_back(std::move(b));
  }
  for (const auto& field : plain_list_fields()) {
    Block b;
    b.tag = BlockTag::Metadata;
    b.values = one_hot(records, vocab, field);
    for (const auto& cat : vocab.categories(field)) b.names.push_back(field + "=" + cat);
    blocks.push_back(std::move(b));
  }
  for (const auto& field : reduced_list_fields()) {
    const Matrix raw = one_hot(records, vocab, field);
    if (raw.cols() == 0) continue;
    blocks.push_back(
        feature_detail::reduced_or_raw(raw, field, tsvd_models, vocab, BlockTag::Metadata));
  }

  if (tier == Tier::M2 || tier == Tier::M3) {
    const Matrix raw = one_hot(records, vocab, "concepts");
    if (raw.cols() > 0)
      blocks.push_back(
          feature_detail::reduced_or_raw(raw, "concepts", tsvd_models, vocab, BlockTag::Concepts));
  }

  if (tier == Tier::M3) {
    if (embeddings == nullptr || embeddings->size() != records.size())
      throw MissingEmbedding(records.empty() ? "<none>" : records.front().id);
    const std::size_t dim = embeddings->empty() ? 0 : embeddings->front().size();
    Matrix emb(records.size(), dim);
    for (std::size_t i = 0; i < records.size(); ++i) {
      if ((*embeddings)[i].size() != dim || dim == 0) throw MissingEmbedding(records[i].id);
      for (std::size_t j = 0; j < dim; ++j) emb(i, j) = (*embeddings)[i][j];
    }
    Block b;
    b.tag = BlockTag::Abstract;
    const auto it = tsvd_models.find("abstract");
    if (it != tsvd_models.end()) {
      b.values = apply_tsvd(it->second, emb);
      for (std::size_t j = 0; j < b.values.cols(); ++j)
        b.names.push_back("abstract_svd_" + std::to_string(j));
    } else {
      b.values = std::move(emb);
      for (std::size_t j = 0; j < b.values.cols(); ++j)
        b.names.push_back("abstract_emb_" + std::to_string(j));
    }
    blocks.push_back(std::move(b));
  }

  feature_detail::append_block(fm, blocks);
  return fm;
}

}  // namespace tip
