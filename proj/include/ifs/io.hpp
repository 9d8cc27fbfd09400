#pragma once

// CSV ingestion and locale-independent number formatting.

#include "ifs/error_model.hpp"
#include "ifs/errors.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace ifs::io {

/// Malformed CSV content. `row` is the 1-based line number in the file
/// (the header is line 1, so the first data row is row 2), `column` the
/// header name, or empty when the whole line is at fault.
class ParseError : public InputError {
 public:
  ParseError(std::string source, std::size_t row, std::string column, const std::string& what);
  std::size_t row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

/// Observations (y_i, delta_i, x*_i) with covariate names.
struct Dataset {
  std::vector<double> time;
  std::vector<int> status;
  Eigen::MatrixXd covariates;  // n x p
  std::vector<std::string> names;
  std::vector<std::string> subject_ids;  // empty unless an id column is present

  std::size_t size() const noexcept { return time.size(); }
};

/// Schema `time,status,<covariates...>`, optionally preceded by an `id` or
/// `subject` column. Rows with any missing value are rejected.
Dataset load_main_csv(const std::filesystem::path& path);
Dataset parse_main_csv(std::istream& in, const std::string& source);
void write_main_csv(const std::filesystem::path& path, const Dataset& data);

/// Schema `subject,replicate,<covariates...>`. Subjects keep the order of
/// their first appearance; subjects with a single replicate are counted in
/// `single_replicate_subjects`.
error_model::RepeatedMeasurements load_repeats_csv(const std::filesystem::path& path);
error_model::RepeatedMeasurements parse_repeats_csv(std::istream& in, const std::string& source);

/// Schema `<x_star covariates...>,<x covariates...>`: an even number of
/// columns, surrogate half first.
error_model::ValidationPairs load_validation_csv(const std::filesystem::path& path);
error_model::ValidationPairs parse_validation_csv(std::istream& in, const std::string& source);

/// Headerless numeric matrix; lines starting with '#' are skipped.
Eigen::MatrixXd load_matrix_csv(const std::filesystem::path& path);
Eigen::MatrixXd parse_matrix_csv(std::istream& in, const std::string& source);
void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m);

/// 17 significant digits, '.' decimal point regardless of locale.
std::string format_double(double v);

/// Strict full-field parse; throws InputError on anything else.
double parse_double(std::string_view field);

std::vector<std::string> split_csv_line(std::string_view line);

}  // namespace ifs::io
