#pragma once

// Columnar CSV export of feature matrices with a sidecar JSON manifest
// carrying block tags and provenance hashes. Values are printed with enough
// digits to round-trip doubles exactly.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "tip/errors.hpp"
#include "tip/features.hpp"
#include "tip/rng.hpp"

namespace tip {

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

/// Split one CSV line honoring quoted fields.
inline std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Write matrix values as CSV. Leading '#' lines carry provenance key=value
/// pairs and are skipped by the reader.
inline void write_feature_csv(const FeatureMatrix& fm, const std::filesystem::path& path,
                              const std::vector<std::string>& provenance_lines = {}) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write feature csv: " + path.string());
  for (const auto& line : provenance_lines) out << "# " << line << '\n';
  for (std::size_t j = 0; j < fm.column_names.size(); ++j) {
    if (j) out << ',';
    out << csv_escape(fm.column_names[j]);
  }
  out << '\n';
  for (std::size_t i = 0; i < fm.values.rows(); ++i) {
    for (std::size_t j = 0; j < fm.values.cols(); ++j) {
      if (j) out << ',';
      out << format_double(fm.values(i, j));
    }
    out << '\n';
  }
}

inline nlohmann::json feature_manifest(const FeatureMatrix& fm,
                                       const std::map<std::string, TsvdModel>& tsvd_models,
                                       const VocabSpec& vocab) {
  nlohmann::json j;
  j["tier"] = to_string(fm.tier);
  j["columns"] = fm.column_names;
  std::vector<std::string> tags;
  tags.reserve(fm.column_blocks.size());
  for (const auto t : fm.column_blocks) tags.emplace_back(to_string(t));
  j["blocks"] = std::move(tags);
  nlohmann::json vocab_dump;
  for (const auto& [field, cats] : vocab.vocab) vocab_dump[field] = cats;
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(fnv1a64(vocab_dump.dump())));
  j["vocab_hash"] = std::string(hex);
  nlohmann::json hashes = nlohmann::json::object();
  for (const auto& [field, model] : tsvd_models) {
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(tsvd_to_json(model).dump())));
    hashes[field] = std::string(hex);
  }
  j["tsvd_hashes"] = std::move(hashes);
  return j;
}

inline void write_feature_manifest(const nlohmann::json& manifest,
                                   const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write feature manifest: " + path.string());
  out << manifest.dump(2) << '\n';
}

/// Read a feature CSV plus its manifest back into a FeatureMatrix.
inline FeatureMatrix read_feature_csv(const std::filesystem::path& csv_path,
                                      const std::filesystem::path& manifest_path) {
  std::ifstream manifest_in(manifest_path);
  if (!manifest_in) throw FileNotFound(manifest_path.string());
  nlohmann::json manifest;
  manifest_in >> manifest;

  std::ifstream in(csv_path);
  if (!in) throw FileNotFound(csv_path.string());

  FeatureMatrix fm;
  fm.tier = tier_from_string(manifest.at("tier").get<std::string>());
  const auto tags = manifest.at("blocks").get<std::vector<std::string>>();
  for (const auto& t : tags) {
    if (t == "metadata") fm.column_blocks.push_back(BlockTag::Metadata);
    else if (t == "concepts") fm.column_blocks.push_back(BlockTag::Concepts);
    else if (t == "abstract") fm.column_blocks.push_back(BlockTag::Abstract);
    else throw DataError("unknown block tag in manifest: " + t);
  }

  std::string line;
  bool header_seen = false;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto cells = csv_split(line);
    if (!header_seen) {
      fm.column_names = cells;
      header_seen = true;
      continue;
    }
    if (cells.size() != fm.column_names.size())
      throw DataError("feature csv row width mismatch in " + csv_path.string());
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(std::strtod(c.c_str(), nullptr));
    rows.push_back(std::move(row));
  }
  if (!header_seen) throw DataError("feature csv has no header: " + csv_path.string());
  if (fm.column_blocks.size() != fm.column_names.size())
    throw DataError("manifest block tags do not match csv columns: " + csv_path.string());
  fm.values = Matrix(rows.size(), fm.column_names.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) fm.values(i, j) = rows[i][j];
  return fm;
}

}  // namespace tip
