#include "ifs/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <unordered_map>

namespace ifs::io {

ParseError::ParseError(std::string source, std::size_t row, std::string column,
                       const std::string& what)
    : InputError(source + ": row " + std::to_string(row) +
                 (column.empty() ? std::string() : ", column '" + column + "'") + ": " + what),
      row_(row),
      column_(std::move(column)) {}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v,
                                 std::chars_format::general, 17);
  if (ec != std::errc{}) throw InputError("cannot format number");
  return std::string(buf.data(), ptr);
}

double parse_double(std::string_view field) {
  if (field.empty()) throw InputError("missing value");
  const char* begin = field.data();
  const char* end = begin + field.size();
  if (*begin == '+') ++begin;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc{} || ptr != end)
    throw InputError("not a number: '" + std::string(field) + "'");
  if (!std::isfinite(v)) throw InputError("non-finite value: '" + std::string(field) + "'");
  return v;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  fields.push_back(std::move(cur));
  for (auto& f : fields) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return fields;
}

namespace {

struct Line {
  std::size_t number;
  std::vector<std::string> fields;
};

// Non-blank lines, CR and a leading BOM stripped. Optionally drops '#' lines.
std::vector<Line> read_lines(std::istream& in, bool skip_comments) {
  std::vector<Line> out;
  std::string raw;
  std::size_t number = 0;
  while (std::getline(in, raw)) {
    ++number;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (number == 1 && raw.rfind("\xEF\xBB\xBF", 0) == 0) raw.erase(0, 3);
    if (raw.find_first_not_of(" \t") == std::string::npos) continue;
    if (skip_comments && raw[raw.find_first_not_of(" \t")] == '#') continue;
    out.push_back({number, split_csv_line(raw)});
  }
  return out;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  return in;
}

bool is_missing(const std::string& f) {
  return f.empty() || f == "NA" || f == "NaN" || f == "nan" || f == "." || f == "null";
}

double numeric_field(const std::string& source, const Line& line, std::size_t col,
                     const std::vector<std::string>& header) {
  const std::string& f = line.fields[col];
  if (is_missing(f)) throw ParseError(source, line.number, header[col], "missing value");
  try {
    return parse_double(f);
  } catch (const InputError& e) {
    throw ParseError(source, line.number, header[col], e.what());
  }
}

void require_width(const std::string& source, const Line& line, std::size_t width) {
  if (line.fields.size() != width)
    throw ParseError(source, line.number, "",
                     "expected " + std::to_string(width) + " fields, found " +
                         std::to_string(line.fields.size()));
}

}  // namespace

Dataset parse_main_csv(std::istream& in, const std::string& source) {
  const auto lines = read_lines(in, false);
  if (lines.empty()) throw ParseError(source, 1, "", "empty file");
  const auto& header = lines.front().fields;
  std::size_t off = 0;
  if (!header.empty() && (header[0] == "id" || header[0] == "subject")) off = 1;
  if (header.size() < off + 3 || header[off] != "time" || header[off + 1] != "status")
    throw ParseError(source, lines.front().number, "",
                     "header must be 'time,status,<covariates...>' (optionally led by 'id')");

  Dataset d;
  d.names.assign(header.begin() + static_cast<std::ptrdiff_t>(off + 2), header.end());
  const std::size_t p = d.names.size();
  const std::size_t n = lines.size() - 1;
  if (n < 2) throw ParseError(source, lines.front().number, "", "need at least 2 data rows");
  d.time.reserve(n);
  d.status.reserve(n);
  d.covariates.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));

  for (std::size_t r = 0; r < n; ++r) {
    const Line& line = lines[r + 1];
    require_width(source, line, header.size());
    if (off == 1) d.subject_ids.push_back(line.fields[0]);

    const double t = numeric_field(source, line, off, header);
    if (!(t > 0.0)) throw ParseError(source, line.number, "time", "time must be positive");
    const double s = numeric_field(source, line, off + 1, header);
    if (s != 0.0 && s != 1.0)
      throw ParseError(source, line.number, "status",
                       "status must be 0 or 1, found '" + line.fields[off + 1] + "'");
    d.time.push_back(t);
    d.status.push_back(static_cast<int>(s));
    for (std::size_t k = 0; k < p; ++k)
      d.covariates(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) =
          numeric_field(source, line, off + 2 + k, header);
  }
  return d;
}

Dataset load_main_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_main_csv(in, path.string());
}

void write_main_csv(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  const bool ids = !data.subject_ids.empty();
  if (ids) out << "id,";
  out << "time,status";
  for (const auto& name : data.names) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (ids) out << data.subject_ids[i] << ',';
    out << format_double(data.time[i]) << ',' << data.status[i];
    for (Eigen::Index k = 0; k < data.covariates.cols(); ++k)
      out << ',' << format_double(data.covariates(static_cast<Eigen::Index>(i), k));
    out << '\n';
  }
}

error_model::RepeatedMeasurements parse_repeats_csv(std::istream& in, const std::string& source) {
  const auto lines = read_lines(in, false);
  if (lines.empty()) throw ParseError(source, 1, "", "empty file");
  const auto& header = lines.front().fields;
  if (header.size() < 3 || header[0] != "subject" || header[1] != "replicate")
    throw ParseError(source, lines.front().number, "",
                     "header must be 'subject,replicate,<covariates...>'");
  const std::size_t p = header.size() - 2;

  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<std::pair<double, std::vector<double>>>> rows;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const Line& line = lines[r];
    require_width(source, line, header.size());
    const std::string& id = line.fields[0];
    if (id.empty()) throw ParseError(source, line.number, "subject", "missing subject id");
    const double rep = numeric_field(source, line, 1, header);
    std::vector<double> values(p);
    for (std::size_t k = 0; k < p; ++k) values[k] = numeric_field(source, line, 2 + k, header);
    auto [it, inserted] = rows.try_emplace(id);
    if (inserted) order.push_back(id);
    for (const auto& prev : it->second)
      if (prev.first == rep)
        throw ParseError(source, line.number, "replicate",
                         "duplicate replicate label for subject '" + id + "'");
    it->second.emplace_back(rep, std::move(values));
  }
  if (order.empty()) throw ParseError(source, lines.front().number, "", "no data rows");

  error_model::RepeatedMeasurements out;
  for (const auto& id : order) {
    const auto& reps = rows.at(id);
    error_model::RepeatedMeasurements::Subject s;
    s.id = id;
    s.replicates.resize(static_cast<Eigen::Index>(reps.size()), static_cast<Eigen::Index>(p));
    for (std::size_t r = 0; r < reps.size(); ++r)
      for (std::size_t k = 0; k < p; ++k)
        s.replicates(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) =
            reps[r].second[k];
    if (reps.size() == 1) ++out.single_replicate_subjects;
    out.subjects.push_back(std::move(s));
  }
  return out;
}

error_model::RepeatedMeasurements load_repeats_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_repeats_csv(in, path.string());
}

error_model::ValidationPairs parse_validation_csv(std::istream& in, const std::string& source) {
  const auto lines = read_lines(in, false);
  if (lines.empty()) throw ParseError(source, 1, "", "empty file");
  const auto& header = lines.front().fields;
  if (header.size() < 2 || header.size() % 2 != 0)
    throw ParseError(source, lines.front().number, "",
                     "validation file needs an even number of columns (surrogate half, then "
                     "true half); found " +
                         std::to_string(header.size()));
  const std::size_t p = header.size() / 2;
  const std::size_t m = lines.size() - 1;
  error_model::ValidationPairs v;
  v.surrogate.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(p));
  v.truth.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(p));
  for (std::size_t r = 0; r < m; ++r) {
    const Line& line = lines[r + 1];
    require_width(source, line, header.size());
    for (std::size_t k = 0; k < p; ++k) {
      v.surrogate(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) =
          numeric_field(source, line, k, header);
      v.truth(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) =
          numeric_field(source, line, p + k, header);
    }
  }
  if (m < 2) throw ParseError(source, lines.front().number, "", "need at least 2 validation rows");
  return v;
}

error_model::ValidationPairs load_validation_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_validation_csv(in, path.string());
}

Eigen::MatrixXd parse_matrix_csv(std::istream& in, const std::string& source) {
  const auto lines = read_lines(in, true);
  if (lines.empty()) throw ParseError(source, 1, "", "empty matrix file");
  const std::size_t cols = lines.front().fields.size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(lines.size()), static_cast<Eigen::Index>(cols));
  std::vector<std::string> names(cols);
  for (std::size_t k = 0; k < cols; ++k) names[k] = std::to_string(k + 1);
  for (std::size_t r = 0; r < lines.size(); ++r) {
    require_width(source, lines[r], cols);
    for (std::size_t k = 0; k < cols; ++k)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) =
          numeric_field(source, lines[r], k, names);
  }
  return m;
}

Eigen::MatrixXd load_matrix_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_matrix_csv(in, path.string());
}

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

}  // namespace ifs::io
