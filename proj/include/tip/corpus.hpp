#pragma once

// Corpus ingestion: line-oriented loading, suitability filtering and binary
// label assignment for the two translational outcomes.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "tip/errors.hpp"
#include "tip/record.hpp"

namespace tip {

struct LoadResult {
  std::vector<PublicationRecord> records;
  std::size_t skipped = 0;  // malformed lines in non-strict mode
};

/// Load a corpus file (one JSON record per line). In strict mode the first
/// malformed line is an error; otherwise malformed lines are skipped and
/// counted. Blank lines are ignored.
inline LoadResult load_corpus(const std::filesystem::path& path, bool strict = false) {
  std::ifstream in(path);
  if (!in) throw FileNotFound(path.string());
  LoadResult out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.records.push_back(parse_record(line, line_no));
    } catch (const SchemaError&) {
      if (strict) throw;
      ++out.skipped;
    }
  }
  return out;
}

inline void write_corpus(const std::filesystem::path& path,
                         const std::vector<PublicationRecord>& records) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  for (const auto& r : records) out << serialize_record(r) << '\n';
}

struct CorpusFilterConfig {
  int year_min = 1990;
  int year_max = 2017;
  // Absence of any of these marks a record "insufficient data".
  std::vector<std::string> required_fields = {"abstract", "journal_id", "first_author_id", "year"};
};

struct FilterReport {
  std::size_t insufficient_data = 0;
  std::size_t out_of_window = 0;
};

struct FilterResult {
  std::vector<PublicationRecord> kept;
  FilterReport report;
};

/// Keep records that carry all required fields and fall inside the year
/// window. A record failing both checks counts once, as insufficient_data.
inline FilterResult filter_corpus(const std::vector<PublicationRecord>& records,
                                  const CorpusFilterConfig& config) {
  if (config.year_min > config.year_max)
    throw ConfigError("filter: year_min exceeds year_max");
  for (const auto& f : config.required_fields) {
    PublicationRecord probe;
    probe.authors_count = 1;
    record_field_present(probe, f);  // throws UnknownField on a bad name
  }
  FilterResult out;
  for (const auto& r : records) {
    bool sufficient = true;
    for (const auto& f : config.required_fields) {
      if (!record_field_present(r, f)) {
        sufficient = false;
        break;
      }
    }
    if (!sufficient) {
      ++out.report.insufficient_data;
      continue;
    }
    if (r.year < config.year_min || r.year > config.year_max) {
      ++out.report.out_of_window;
      continue;
    }
    out.kept.push_back(r);
  }
  return out;
}

enum class LabelKind { Patents, Trials };

inline const char* to_string(LabelKind k) {
  return k == LabelKind::Patents ? "patents" : "trials";
}

inline LabelKind label_kind_from_string(std::string_view s) {
  if (s == "patents" || s == "Patents") return LabelKind::Patents;
  if (s == "trials" || s == "Trials" || s == "clinical_trials") return LabelKind::Trials;
  throw ConfigError("unknown label kind: " + std::string(s));
}

inline int citation_count_for(const PublicationRecord& r, LabelKind kind) {
  return kind == LabelKind::Patents ? r.patent_citation_count : r.trial_citation_count;
}

inline std::optional<int> first_citation_year_for(const PublicationRecord& r, LabelKind kind) {
  return kind == LabelKind::Patents ? r.first_patent_citation_year : r.first_trial_citation_year;
}

struct LabeledDataset {
  std::vector<PublicationRecord> records;
  std::vector<int> labels;  // {0, 1}, aligned with records
  LabelKind kind = LabelKind::Patents;
};

/// Label 1 iff the record has at least one citation of the given kind; no
/// distinction is made between one and many citations.
inline LabeledDataset assign_labels(std::vector<PublicationRecord> records, LabelKind kind) {
  LabeledDataset ds;
  ds.kind = kind;
  ds.labels.reserve(records.size());
  for (const auto& r : records) ds.labels.push_back(citation_count_for(r, kind) >= 1 ? 1 : 0);
  ds.records = std::move(records);
  return ds;
}

}  // namespace tip
