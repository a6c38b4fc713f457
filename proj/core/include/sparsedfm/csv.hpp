#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "sparsedfm/panel.hpp"

namespace sdfm {

/// Reads a comma-separated panel with a mandatory header row. Cells that are
/// empty or the literal "NA" are missing. With `has_index` the first column
/// holds opaque time labels and is excluded from the values.
TimePanel load_csv(const std::filesystem::path& path, bool has_index);
TimePanel parse_csv(std::istream& in, bool has_index, const std::string& source = "<stream>");

/// Lossless decimal form of a double (17 significant digits); NaN -> "NA".
std::string format_double(double value);

/// Writes a panel; missing cells as NA. The index column is named "time".
void write_panel_csv(const std::filesystem::path& path, const TimePanel& panel,
                     bool with_index = true);

/// Writes a plain matrix with the given header. Non-empty `row_labels` adds
/// a leading label column named `label_header`.
void write_matrix_csv(const std::filesystem::path& path, const MatrixXd& m,
                      const std::vector<std::string>& header,
                      const std::vector<std::string>& row_labels = {},
                      const std::string& label_header = "time");

/// Splits one CSV line on commas, honouring double-quoted fields.
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace sdfm
