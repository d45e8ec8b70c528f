#pragma once

// Shared test fixtures: record factories and a scratch-directory guard.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tip/record.hpp"

namespace tiptest {

/// A fully-populated record with distinguishable values, varied by `i`.
inline tip::PublicationRecord make_record(int i, int year = 2005) {
  tip::PublicationRecord r;
  r.id = "pub-" + std::to_string(i);
  r.year = year;
  r.abstract = "Amyloid beta aggregation study number " + std::to_string(i);
  r.concepts = {{"amyloid", 0.9}, {"tau", 0.5 + 0.01 * (i % 10)}};
  r.category_rcdc = {"Neurodegenerative", "Aging"};
  r.category_hra = {"Aetiology"};
  r.category_hracs_rac = {"2.1 Endogenous risks"};
  r.reference_ids_count = 30 + i % 7;
  r.first_author_id = "auth-" + std::to_string(i % 40);
  r.first_author_name = "Author " + std::to_string(i % 40);
  r.first_author_affiliation_id = "aff-" + std::to_string(i % 12);
  r.first_author_affiliation_country = "United Kingdom";
  r.first_author_affiliation_name = "Institute " + std::to_string(i % 12);
  r.authors_count = 1 + i % 9;
  r.funders = {"Funder " + std::to_string(i % 6)};
  r.funder_countries = {"United Kingdom"};
  r.journal_id = "jour-" + std::to_string(i % 15);
  r.journal_title = "Journal " + std::to_string(i % 15);
  r.open_access = static_cast<tip::OpenAccess>(i % 5);
  r.research_org_names = {"Org " + std::to_string(i % 20)};
  r.research_org_names_count = 1;
  r.research_org_country_names = {"United Kingdom"};
  r.research_org_country_names_count = 1;
  return r;
}

inline tip::PublicationRecord make_cited_record(int i, int year, int first_cite_year,
                                                int count = 1) {
  auto r = make_record(i, year);
  r.patent_citation_count = count;
  r.first_patent_citation_year = first_cite_year;
  return r;
}

/// Creates a unique scratch directory and removes it on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    dir_ = std::filesystem::temp_directory_path() /
           ("tip-test-" + tag + "-" + std::to_string(counter()++));
    std::filesystem::remove_all(dir_);
    std::filesystem::create_directories(dir_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(dir_, ec);
  }
  const std::filesystem::path& path() const { return dir_; }

 private:
  static std::uint64_t& counter() {
    static std::uint64_t c = 0;
    return c;
  }
  std::filesystem::path dir_;
};

}  // namespace tiptest
