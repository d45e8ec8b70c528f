#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tip {

// Error families map onto CLI exit codes: ConfigError -> 2, DataError -> 3,
// ServiceError -> 4.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ServiceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FileNotFound : DataError {
  explicit FileNotFound(const std::string& path)
      : DataError("file not found: " + path) {}
};

struct SchemaError : DataError {
  std::size_t line;
  std::string field;
  SchemaError(std::size_t line_no, std::string field_name, const std::string& detail)
      : DataError("schema error at line " + std::to_string(line_no) + ", field '" +
                  field_name + "': " + detail),
        line(line_no),
        field(std::move(field_name)) {}
};

struct EmptyInput : DataError {
  using DataError::DataError;
};

struct DegenerateInput : DataError {
  using DataError::DataError;
};

struct LengthMismatch : DataError {
  using DataError::DataError;
};

struct ShapeMismatch : DataError {
  using DataError::DataError;
};

struct RankError : DataError {
  using DataError::DataError;
};

struct UnknownField : DataError {
  explicit UnknownField(const std::string& field)
      : DataError("unknown field: " + field) {}
};

struct SingleClassError : DataError {
  using DataError::DataError;
};

struct NonFiniteFeature : DataError {
  using DataError::DataError;
};

struct NoPositives : DataError {
  using DataError::DataError;
};

struct MissingEmbedding : DataError {
  explicit MissingEmbedding(const std::string& record_id)
      : DataError("missing abstract embedding for record: " + record_id) {}
};

struct UncoveredYear : DataError {
  explicit UncoveredYear(int year)
      : DataError("year " + std::to_string(year) + " is not covered by any decade boundary") {}
};

struct LeakageViolation : DataError {
  explicit LeakageViolation(const std::string& columns)
      : DataError("leakage-group columns present in feature matrix: " + columns) {}
};

struct MissingArtifact : DataError {
  std::string stage;
  explicit MissingArtifact(std::string stage_name, const std::string& path = {})
      : DataError("missing artifact from stage '" + stage_name + "'" +
                  (path.empty() ? std::string() : (": " + path))),
        stage(std::move(stage_name)) {}
};

struct VersionError : DataError {
  using DataError::DataError;
};

struct CorruptModel : DataError {
  using DataError::DataError;
};

struct EmbeddingServiceError : ServiceError {
  int status;
  std::string body;
  EmbeddingServiceError(int status_code, std::string response_body)
      : ServiceError("embedding service error, status " + std::to_string(status_code) +
                     ": " + response_body),
        status(status_code),
        body(std::move(response_body)) {}
};

struct DimensionMismatch : ServiceError {
  DimensionMismatch(std::size_t expected, std::size_t got)
      : ServiceError("embedding dimension mismatch: expected " + std::to_string(expected) +
                     ", got " + std::to_string(got)) {}
};

}  // namespace tip
