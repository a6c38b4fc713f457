#include "sparsedfm/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "sparsedfm/error.hpp"

namespace sdfm {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

bool parse_number(const std::string& cell, double& out) {
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  if (begin != end && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  return out;
}

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  cells.push_back(trim(cur));
  return cells;
}

TimePanel parse_csv(std::istream& in, bool has_index, const std::string& source) {
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) {
      header = split_csv_line(line);
      break;
    }
  }
  if (header.empty()) throw DataError(source + ": missing header row");
  if (!header.empty() && header[0].size() >= 3 && header[0].compare(0, 3, "\xEF\xBB\xBF") == 0) {
    header[0] = header[0].substr(3);
  }

  const std::size_t offset = has_index ? 1 : 0;
  if (header.size() <= offset) throw DataError(source + ": no value columns");
  std::vector<std::string> names(header.begin() + static_cast<std::ptrdiff_t>(offset), header.end());
  std::set<std::string> unique(names.begin(), names.end());
  if (unique.size() != names.size()) throw DataError(source + ": duplicate column names");

  std::vector<std::vector<double>> rows;
  std::vector<std::string> index;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw DataError(source + ": line " + std::to_string(line_no) + " has " +
                      std::to_string(cells.size()) + " cells, header has " +
                      std::to_string(header.size()));
    }
    std::vector<double> row(names.size());
    for (std::size_t j = 0; j < names.size(); ++j) {
      const std::string& cell = cells[j + offset];
      if (cell.empty() || cell == "NA") {
        row[j] = std::numeric_limits<double>::quiet_NaN();
      } else if (!parse_number(cell, row[j])) {
        throw DataError(source + ": cannot parse '" + cell + "' at row " +
                        std::to_string(rows.size() + 1) + ", column '" + names[j] + "'");
      }
    }
    if (has_index) index.push_back(cells[0]);
    rows.push_back(std::move(row));
  }

  MatrixXd values(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(names.size()));
  for (std::size_t t = 0; t < rows.size(); ++t) {
    for (std::size_t j = 0; j < names.size(); ++j) {
      values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = rows[t][j];
    }
  }
  return TimePanel::from_matrix(std::move(values), std::move(names), std::move(index));
}

TimePanel load_csv(const std::filesystem::path& path, bool has_index) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return parse_csv(in, has_index, path.string());
}

std::string format_double(double value) {
  if (std::isnan(value)) return "NA";
  char buf[64];
  const int len = std::snprintf(buf, sizeof(buf), "%.17g", value);
  return std::string(buf, static_cast<std::size_t>(len));
}

void write_panel_csv(const std::filesystem::path& path, const TimePanel& panel, bool with_index) {
  auto out = open_for_write(path);
  if (with_index) out << "time";
  for (std::size_t j = 0; j < panel.names.size(); ++j) {
    if (with_index || j > 0) out << ',';
    out << panel.names[j];
  }
  out << '\n';
  for (Eigen::Index t = 0; t < panel.n(); ++t) {
    if (with_index) out << panel.index[static_cast<std::size_t>(t)];
    for (Eigen::Index j = 0; j < panel.p(); ++j) {
      if (with_index || j > 0) out << ',';
      out << (panel.mask(t, j) ? format_double(panel.values(t, j)) : "NA");
    }
    out << '\n';
  }
}

void write_matrix_csv(const std::filesystem::path& path, const MatrixXd& m,
                      const std::vector<std::string>& header,
                      const std::vector<std::string>& row_labels, const std::string& label_header) {
  if (static_cast<Eigen::Index>(header.size()) != m.cols()) {
    throw UsageError("write_matrix_csv: header length does not match column count");
  }
  const bool labelled = !row_labels.empty();
  if (labelled && static_cast<Eigen::Index>(row_labels.size()) != m.rows()) {
    throw UsageError("write_matrix_csv: row label count does not match row count");
  }
  auto out = open_for_write(path);
  if (labelled) out << label_header;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (labelled || j > 0) out << ',';
    out << header[j];
  }
  out << '\n';
  for (Eigen::Index t = 0; t < m.rows(); ++t) {
    if (labelled) out << row_labels[static_cast<std::size_t>(t)];
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (labelled || j > 0) out << ',';
      out << format_double(m(t, j));
    }
    out << '\n';
  }
}

}  // namespace sdfm
