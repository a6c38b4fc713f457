#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sparsedfm/linalg.hpp"
#include "sparsedfm/panel.hpp"
#include "sparsedfm/tuning.hpp"

namespace sdfm::svg {

/// Grid of the panel with missing cells shaded.
std::string missing_grid(const TimePanel& panel);

/// Diverging heatmap of the loadings; exact zeros are left blank.
std::string loading_heatmap(const MatrixXd& Lambda, const std::vector<std::string>& names);

/// One polyline per factor.
std::string factor_lines(const MatrixXd& factors);

/// BIC against log10(alpha), with the selected alpha marked.
std::string bic_curve(const AlphaPath& path);

/// IC1-IC3 and the variance share against r.
std::string ic_plot(const IcTable& table);

void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace sdfm::svg
