#pragma once

// Publication record schema and its line-oriented JSON serialization.
//
// A corpus file is UTF-8 with one JSON object per line, keys in snake_case.
// Unknown keys are preserved across a parse/serialize round-trip but never
// interpreted. The time-dependent citation metrics (times_cited, altmetric,
// recent_citations, relative_citation_ratio) are parsed into a separate
// leakage group that feature assembly has no access to; they exist for
// descriptive statistics only.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tip/errors.hpp"

namespace tip {

enum class OpenAccess { Gold, Bronze, Hybrid, Green, Closed };

inline const char* to_string(OpenAccess oa) {
  switch (oa) {
    case OpenAccess::Gold: return "Gold";
    case OpenAccess::Bronze: return "Bronze";
    case OpenAccess::Hybrid: return "Hybrid";
    case OpenAccess::Green: return "Green";
    case OpenAccess::Closed: return "Closed";
  }
  return "Closed";
}

inline std::optional<OpenAccess> open_access_from_string(std::string_view s) {
  if (s == "Gold") return OpenAccess::Gold;
  if (s == "Bronze") return OpenAccess::Bronze;
  if (s == "Hybrid") return OpenAccess::Hybrid;
  if (s == "Green") return OpenAccess::Green;
  if (s == "Closed") return OpenAccess::Closed;
  return std::nullopt;
}

struct ConceptMention {
  std::string term;
  double importance = 0.0;  // in [0, 1]
  bool operator==(const ConceptMention&) const = default;
};

// Quarantined, descriptive-statistics-only metrics.
struct LeakageMetrics {
  std::optional<double> recent_citations;
  std::optional<double> altmetric;
  std::optional<double> relative_citation_ratio;
  std::optional<double> times_cited;
  bool operator==(const LeakageMetrics&) const = default;
};

struct PublicationRecord {
  std::string id;
  int year = 0;
  std::optional<std::string> abstract;
  std::vector<ConceptMention> concepts;
  std::vector<std::string> category_rcdc;
  std::vector<std::string> category_hra;
  std::vector<std::string> category_hracs_rac;
  int reference_ids_count = 0;
  std::string first_author_id;
  std::string first_author_name;
  std::string first_author_affiliation_id;
  std::string first_author_affiliation_country;
  std::string first_author_affiliation_name;
  int authors_count = 1;
  std::vector<std::string> funders;
  std::vector<std::string> funder_countries;
  std::string journal_id;
  std::string journal_title;
  OpenAccess open_access = OpenAccess::Closed;
  std::vector<std::string> research_org_names;
  int research_org_names_count = 0;
  std::vector<std::string> research_org_country_names;
  int research_org_country_names_count = 0;
  int patent_citation_count = 0;
  int trial_citation_count = 0;
  std::optional<int> first_patent_citation_year;
  std::optional<int> first_trial_citation_year;
  LeakageMetrics leakage;
  nlohmann::json unknown_fields = nlohmann::json::object();

  bool operator==(const PublicationRecord&) const = default;
};

namespace detail {

inline std::string json_type_name(const nlohmann::json& j) { return j.type_name(); }

inline int req_int(const nlohmann::json& j, std::size_t line) {
  if (!j.is_number_integer()) throw SchemaError(line, "", "expected integer");
  return j.get<int>();
}

inline double req_num(const nlohmann::json& j, std::size_t line) {
  if (!j.is_number()) throw SchemaError(line, "", "expected number");
  return j.get<double>();
}

inline std::string req_str(const nlohmann::json& j, std::size_t line) {
  if (!j.is_string()) throw SchemaError(line, "", "expected string");
  return j.get<std::string>();
}

inline std::vector<std::string> req_str_list(const nlohmann::json& j, std::size_t line) {
  if (!j.is_array()) throw SchemaError(line, "", "expected array of strings");
  std::vector<std::string> out;
  out.reserve(j.size());
  for (const auto& e : j) {
    if (!e.is_string()) throw SchemaError(line, "", "expected array of strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

}  // namespace detail

/// Parse one corpus line. Throws SchemaError with the offending field name.
inline PublicationRecord parse_record(const std::string& line, std::size_t line_no = 0) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(line_no, "", std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw SchemaError(line_no, "", "record line must be a JSON object");

  PublicationRecord r;
  bool org_names_count_given = false;
  bool org_countries_count_given = false;

  for (const auto& [key, val] : j.items()) {
    try {
      if (key == "id") {
        r.id = detail::req_str(val, line_no);
      } else if (key == "year") {
        r.year = detail::req_int(val, line_no);
      } else if (key == "abstract") {
        if (!val.is_null()) r.abstract = detail::req_str(val, line_no);
      } else if (key == "concepts") {
        if (!val.is_array()) throw SchemaError(line_no, key, "expected array");
        for (const auto& c : val) {
          if (!c.is_object() || !c.contains("term"))
            throw SchemaError(line_no, key, "concept entries need {term, importance}");
          ConceptMention m;
          m.term = detail::req_str(c.at("term"), line_no);
          m.importance = c.contains("importance") ? detail::req_num(c.at("importance"), line_no) : 0.0;
          if (m.importance < 0.0 || m.importance > 1.0)
            throw SchemaError(line_no, key, "importance outside [0, 1]");
          r.concepts.push_back(std::move(m));
        }
      } else if (key == "category_rcdc") {
        r.category_rcdc = detail::req_str_list(val, line_no);
      } else if (key == "category_hra") {
        r.category_hra = detail::req_str_list(val, line_no);
      } else if (key == "category_hracs_rac") {
        r.category_hracs_rac = detail::req_str_list(val, line_no);
      } else if (key == "reference_ids_count") {
        r.reference_ids_count = detail::req_int(val, line_no);
      } else if (key == "first_author_id") {
        r.first_author_id = detail::req_str(val, line_no);
      } else if (key == "first_author_name") {
        r.first_author_name = detail::req_str(val, line_no);
      } else if (key == "first_author_affiliation_id") {
        r.first_author_affiliation_id = detail::req_str(val, line_no);
      } else if (key == "first_author_affiliation_country") {
        r.first_author_affiliation_country = detail::req_str(val, line_no);
      } else if (key == "first_author_affiliation_name") {
        r.first_author_affiliation_name = detail::req_str(val, line_no);
      } else if (key == "authors_count") {
        r.authors_count = detail::req_int(val, line_no);
      } else if (key == "funders") {
        r.funders = detail::req_str_list(val, line_no);
      } else if (key == "funder_countries") {
        r.funder_countries = detail::req_str_list(val, line_no);
      } else if (key == "journal_id") {
        r.journal_id = detail::req_str(val, line_no);
      } else if (key == "journal_title") {
        r.journal_title = detail::req_str(val, line_no);
      } else if (key == "open_access") {
        const auto oa = open_access_from_string(detail::req_str(val, line_no));
        if (!oa) throw SchemaError(line_no, key, "not one of Gold/Bronze/Hybrid/Green/Closed");
        r.open_access = *oa;
      } else if (key == "research_org_names") {
        r.research_org_names = detail::req_str_list(val, line_no);
      } else if (key == "research_org_names_count") {
        r.research_org_names_count = detail::req_int(val, line_no);
        org_names_count_given = true;
      } else if (key == "research_org_country_names") {
        r.research_org_country_names = detail::req_str_list(val, line_no);
      } else if (key == "research_org_country_names_count") {
        r.research_org_country_names_count = detail::req_int(val, line_no);
        org_countries_count_given = true;
      } else if (key == "patent_citation_count") {
        r.patent_citation_count = detail::req_int(val, line_no);
      } else if (key == "trial_citation_count") {
        r.trial_citation_count = detail::req_int(val, line_no);
      } else if (key == "first_patent_citation_year") {
        if (!val.is_null()) r.first_patent_citation_year = detail::req_int(val, line_no);
      } else if (key == "first_trial_citation_year") {
        if (!val.is_null()) r.first_trial_citation_year = detail::req_int(val, line_no);
      } else if (key == "recent_citations") {
        r.leakage.recent_citations = detail::req_num(val, line_no);
      } else if (key == "altmetric") {
        r.leakage.altmetric = detail::req_num(val, line_no);
      } else if (key == "relative_citation_ratio") {
        r.leakage.relative_citation_ratio = detail::req_num(val, line_no);
      } else if (key == "times_cited") {
        r.leakage.times_cited = detail::req_num(val, line_no);
      } else {
        r.unknown_fields[key] = val;
      }
    } catch (SchemaError& e) {
      if (e.field.empty()) throw SchemaError(line_no, key, e.what());
      throw;
    }
  }

  if (r.id.empty()) throw SchemaError(line_no, "id", "missing or empty");
  if (r.reference_ids_count < 0) throw SchemaError(line_no, "reference_ids_count", "negative");
  if (r.authors_count < 1) throw SchemaError(line_no, "authors_count", "must be >= 1");
  if (r.patent_citation_count < 0) throw SchemaError(line_no, "patent_citation_count", "negative");
  if (r.trial_citation_count < 0) throw SchemaError(line_no, "trial_citation_count", "negative");
  if (!org_names_count_given) {
    r.research_org_names_count = static_cast<int>(r.research_org_names.size());
  } else if (!r.research_org_names.empty() &&
             r.research_org_names_count != static_cast<int>(r.research_org_names.size())) {
    throw SchemaError(line_no, "research_org_names_count", "disagrees with research_org_names length");
  }
  if (!org_countries_count_given) {
    r.research_org_country_names_count = static_cast<int>(r.research_org_country_names.size());
  } else if (!r.research_org_country_names.empty() &&
             r.research_org_country_names_count !=
                 static_cast<int>(r.research_org_country_names.size())) {
    throw SchemaError(line_no, "research_org_country_names_count",
                      "disagrees with research_org_country_names length");
  }
  if (r.first_patent_citation_year) {
    if (r.patent_citation_count < 1)
      throw SchemaError(line_no, "first_patent_citation_year", "present without patent citations");
    if (*r.first_patent_citation_year < r.year)
      throw SchemaError(line_no, "first_patent_citation_year", "precedes publication year");
  }
  if (r.first_trial_citation_year) {
    if (r.trial_citation_count < 1)
      throw SchemaError(line_no, "first_trial_citation_year", "present without trial citations");
    if (*r.first_trial_citation_year < r.year)
      throw SchemaError(line_no, "first_trial_citation_year", "precedes publication year");
  }
  return r;
}

/// One-line JSON form. parse_record(serialize_record(r)) == r for any valid r.
inline std::string serialize_record(const PublicationRecord& r) {
  nlohmann::json j;
  j["id"] = r.id;
  j["year"] = r.year;
  if (r.abstract) j["abstract"] = *r.abstract;
  auto concepts = nlohmann::json::array();
  for (const auto& c : r.concepts)
    concepts.push_back({{"term", c.term}, {"importance", c.importance}});
  j["concepts"] = std::move(concepts);
  j["category_rcdc"] = r.category_rcdc;
  j["category_hra"] = r.category_hra;
  j["category_hracs_rac"] = r.category_hracs_rac;
  j["reference_ids_count"] = r.reference_ids_count;
  j["first_author_id"] = r.first_author_id;
  j["first_author_name"] = r.first_author_name;
  j["first_author_affiliation_id"] = r.first_author_affiliation_id;
  j["first_author_affiliation_country"] = r.first_author_affiliation_country;
  j["first_author_affiliation_name"] = r.first_author_affiliation_name;
  j["authors_count"] = r.authors_count;
  j["funders"] = r.funders;
  j["funder_countries"] = r.funder_countries;
  j["journal_id"] = r.journal_id;
  j["journal_title"] = r.journal_title;
  j["open_access"] = to_string(r.open_access);
  j["research_org_names"] = r.research_org_names;
  j["research_org_names_count"] = r.research_org_names_count;
  j["research_org_country_names"] = r.research_org_country_names;
  j["research_org_country_names_count"] = r.research_org_country_names_count;
  j["patent_citation_count"] = r.patent_citation_count;
  j["trial_citation_count"] = r.trial_citation_count;
  if (r.first_patent_citation_year) j["first_patent_citation_year"] = *r.first_patent_citation_year;
  if (r.first_trial_citation_year) j["first_trial_citation_year"] = *r.first_trial_citation_year;
  if (r.leakage.recent_citations) j["recent_citations"] = *r.leakage.recent_citations;
  if (r.leakage.altmetric) j["altmetric"] = *r.leakage.altmetric;
  if (r.leakage.relative_citation_ratio)
    j["relative_citation_ratio"] = *r.leakage.relative_citation_ratio;
  if (r.leakage.times_cited) j["times_cited"] = *r.leakage.times_cited;
  for (const auto& [key, val] : r.unknown_fields.items()) j[key] = val;
  return j.dump();
}

/// Presence semantics for filter required_fields: strings and lists must be
/// non-empty, year must be positive, the abstract must exist and be non-empty.
inline bool record_field_present(const PublicationRecord& r, std::string_view field) {
  if (field == "id") return !r.id.empty();
  if (field == "year") return r.year > 0;
  if (field == "abstract") return r.abstract.has_value() && !r.abstract->empty();
  if (field == "concepts") return !r.concepts.empty();
  if (field == "category_rcdc") return !r.category_rcdc.empty();
  if (field == "category_hra") return !r.category_hra.empty();
  if (field == "category_hracs_rac") return !r.category_hracs_rac.empty();
  if (field == "reference_ids_count") return true;
  if (field == "first_author_id") return !r.first_author_id.empty();
  if (field == "first_author_name") return !r.first_author_name.empty();
  if (field == "first_author_affiliation_id") return !r.first_author_affiliation_id.empty();
  if (field == "first_author_affiliation_country")
    return !r.first_author_affiliation_country.empty();
  if (field == "first_author_affiliation_name") return !r.first_author_affiliation_name.empty();
  if (field == "authors_count") return true;
  if (field == "funders") return !r.funders.empty();
  if (field == "funder_countries") return !r.funder_countries.empty();
  if (field == "journal_id") return !r.journal_id.empty();
  if (field == "journal_title") return !r.journal_title.empty();
  if (field == "open_access") return true;
  if (field == "research_org_names") return !r.research_org_names.empty();
  if (field == "research_org_country_names") return !r.research_org_country_names.empty();
  throw UnknownField(std::string(field));
}

}  // namespace tip
