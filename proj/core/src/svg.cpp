#include "sparsedfm/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sparsedfm/error.hpp"

namespace sdfm::svg {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 360.0;
constexpr double kMargin = 40.0;
const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string open(double w, double h) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w) + "\" height=\"" + num(h) +
         "\" viewBox=\"0 0 " + num(w) + " " + num(h) + "\" font-family=\"sans-serif\" font-size=\"10\">\n"
         "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

struct Axes {
  double x0, x1, y0, y1;
  double px(double x) const { return kMargin + (x - x0) / (x1 - x0) * (kWidth - 2 * kMargin); }
  double py(double y) const { return kHeight - kMargin - (y - y0) / (y1 - y0) * (kHeight - 2 * kMargin); }
};

Axes make_axes(double x0, double x1, double y0, double y1) {
  if (x1 <= x0) x1 = x0 + 1.0;
  if (y1 <= y0) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  const double pad = 0.05 * (y1 - y0);
  return {x0, x1, y0 - pad, y1 + pad};
}

std::string frame(const Axes& ax, const std::string& xlabel, const std::string& ylabel) {
  std::ostringstream os;
  os << "<rect x=\"" << num(kMargin) << "\" y=\"" << num(kMargin) << "\" width=\"" << num(kWidth - 2 * kMargin)
     << "\" height=\"" << num(kHeight - 2 * kMargin) << "\" fill=\"none\" stroke=\"#444\"/>\n";
  os << "<text x=\"" << num(kWidth / 2) << "\" y=\"" << num(kHeight - 8) << "\" text-anchor=\"middle\">"
     << escape(xlabel) << "</text>\n";
  os << "<text x=\"12\" y=\"" << num(kHeight / 2) << "\" transform=\"rotate(-90 12 " << num(kHeight / 2)
     << ")\" text-anchor=\"middle\">" << escape(ylabel) << "</text>\n";
  os << "<text x=\"" << num(kMargin - 4) << "\" y=\"" << num(ax.py(ax.y0) ) << "\" text-anchor=\"end\">"
     << num(ax.y0) << "</text>\n";
  os << "<text x=\"" << num(kMargin - 4) << "\" y=\"" << num(ax.py(ax.y1) + 8) << "\" text-anchor=\"end\">"
     << num(ax.y1) << "</text>\n";
  return os.str();
}

std::string polyline(const Axes& ax, const std::vector<double>& xs, const std::vector<double>& ys,
                     const char* color) {
  std::ostringstream os;
  os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (!std::isfinite(ys[k])) continue;
    os << num(ax.px(xs[k])) << "," << num(ax.py(ys[k])) << " ";
  }
  os << "\"/>\n";
  return os.str();
}

std::string legend(const std::vector<std::string>& labels) {
  std::ostringstream os;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    const double y = kMargin + 12.0 * static_cast<double>(k) + 10.0;
    os << "<text x=\"" << num(kWidth - kMargin - 4) << "\" y=\"" << num(y) << "\" text-anchor=\"end\" fill=\""
       << kPalette[k % 6] << "\">" << escape(labels[k]) << "</text>\n";
  }
  return os.str();
}

}  // namespace

std::string missing_grid(const TimePanel& panel) {
  const double cw = std::max(2.0, 600.0 / static_cast<double>(panel.p()));
  const double ch = std::max(1.0, 400.0 / static_cast<double>(panel.n()));
  const double w = cw * static_cast<double>(panel.p()) + 2 * kMargin;
  const double h = ch * static_cast<double>(panel.n()) + 2 * kMargin;
  std::ostringstream os;
  os << open(w, h);
  for (Eigen::Index j = 0; j < panel.p(); ++j) {
    for (Eigen::Index t = 0; t < panel.n(); ++t) {
      if (panel.mask(t, j)) continue;
      os << "<rect x=\"" << num(kMargin + cw * static_cast<double>(j)) << "\" y=\""
         << num(kMargin + ch * static_cast<double>(t)) << "\" width=\"" << num(cw) << "\" height=\"" << num(ch)
         << "\" fill=\"#333\"/>\n";
    }
  }
  os << "<rect x=\"" << num(kMargin) << "\" y=\"" << num(kMargin) << "\" width=\"" << num(w - 2 * kMargin)
     << "\" height=\"" << num(h - 2 * kMargin) << "\" fill=\"none\" stroke=\"#444\"/>\n</svg>\n";
  return os.str();
}

std::string loading_heatmap(const MatrixXd& Lambda, const std::vector<std::string>& names) {
  const Eigen::Index p = Lambda.rows();
  const Eigen::Index r = Lambda.cols();
  const double cw = 40.0;
  const double ch = std::clamp(600.0 / static_cast<double>(std::max<Eigen::Index>(p, 1)), 4.0, 16.0);
  const double label_w = 120.0;
  const double w = label_w + cw * static_cast<double>(r) + kMargin;
  const double h = ch * static_cast<double>(p) + 2 * kMargin;
  const double scale = std::max(Lambda.cwiseAbs().maxCoeff(), 1e-12);

  std::ostringstream os;
  os << open(w, h);
  for (Eigen::Index i = 0; i < p; ++i) {
    const double y = kMargin + ch * static_cast<double>(i);
    if (static_cast<std::size_t>(i) < names.size() && ch >= 8.0) {
      os << "<text x=\"" << num(label_w - 4) << "\" y=\"" << num(y + ch - 2) << "\" text-anchor=\"end\">"
         << escape(names[static_cast<std::size_t>(i)]) << "</text>\n";
    }
    for (Eigen::Index j = 0; j < r; ++j) {
      const double v = Lambda(i, j);
      if (v == 0.0) continue;
      const double s = std::min(1.0, std::abs(v) / scale);
      const int fade = static_cast<int>(std::lround(255.0 * (1.0 - s)));
      char color[8];
      if (v > 0) {
        std::snprintf(color, sizeof color, "#ff%02x%02x", fade, fade);
      } else {
        std::snprintf(color, sizeof color, "#%02x%02xff", fade, fade);
      }
      os << "<rect x=\"" << num(label_w + cw * static_cast<double>(j)) << "\" y=\"" << num(y) << "\" width=\""
         << num(cw) << "\" height=\"" << num(ch) << "\" fill=\"" << color << "\" stroke=\"#ccc\"/>\n";
    }
  }
  for (Eigen::Index j = 0; j < r; ++j) {
    os << "<text x=\"" << num(label_w + cw * (static_cast<double>(j) + 0.5)) << "\" y=\"" << num(kMargin - 6)
       << "\" text-anchor=\"middle\">F" << j + 1 << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string factor_lines(const MatrixXd& factors) {
  const Eigen::Index n = factors.rows();
  const Axes ax = make_axes(1.0, static_cast<double>(n), factors.minCoeff(), factors.maxCoeff());
  std::vector<double> xs(static_cast<std::size_t>(n));
  for (Eigen::Index t = 0; t < n; ++t) xs[static_cast<std::size_t>(t)] = static_cast<double>(t + 1);
  std::ostringstream os;
  os << open(kWidth, kHeight) << frame(ax, "time", "factor");
  std::vector<std::string> labels;
  for (Eigen::Index j = 0; j < factors.cols(); ++j) {
    std::vector<double> ys(factors.col(j).data(), factors.col(j).data() + n);
    os << polyline(ax, xs, ys, kPalette[j % 6]);
    labels.push_back("F" + std::to_string(j + 1));
  }
  os << legend(labels) << "</svg>\n";
  return os.str();
}

std::string bic_curve(const AlphaPath& path) {
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& pt : path.points) {
    xs.push_back(std::log10(std::max(pt.alpha, 1e-300)));
    ys.push_back(pt.bic);
  }
  if (xs.empty()) return open(kWidth, kHeight) + "</svg>\n";
  const auto [ymin, ymax] = std::minmax_element(ys.begin(), ys.end());
  const Axes ax = make_axes(xs.front(), xs.back(), *ymin, *ymax);
  std::ostringstream os;
  os << open(kWidth, kHeight) << frame(ax, "log10(alpha)", "BIC") << polyline(ax, xs, ys, kPalette[0]);
  const double xo = ax.px(std::log10(std::max(path.alpha_opt, 1e-300)));
  os << "<line x1=\"" << num(xo) << "\" x2=\"" << num(xo) << "\" y1=\"" << num(kMargin) << "\" y2=\""
     << num(kHeight - kMargin) << "\" stroke=\"#d62728\" stroke-dasharray=\"4 3\"/>\n</svg>\n";
  return os.str();
}

std::string ic_plot(const IcTable& table) {
  std::vector<double> xs(table.r.begin(), table.r.end());
  std::vector<double> all;
  for (const auto* v : {&table.ic1, &table.ic2, &table.ic3}) all.insert(all.end(), v->begin(), v->end());
  if (xs.empty()) return open(kWidth, kHeight) + "</svg>\n";
  const auto [ymin, ymax] = std::minmax_element(all.begin(), all.end());
  const Axes ax = make_axes(xs.front(), xs.back(), *ymin, *ymax);
  std::ostringstream os;
  os << open(kWidth, kHeight) << frame(ax, "r", "information criterion");
  os << polyline(ax, xs, table.ic1, kPalette[0]) << polyline(ax, xs, table.ic2, kPalette[1])
     << polyline(ax, xs, table.ic3, kPalette[2]);
  // variance shares as bars along the bottom quarter
  const double bar_w = (kWidth - 2 * kMargin) / static_cast<double>(xs.size()) * 0.5;
  for (std::size_t k = 0; k < table.variance_share.size() && k < xs.size(); ++k) {
    const double hgt = table.variance_share[k] * (kHeight - 2 * kMargin) * 0.25;
    os << "<rect x=\"" << num(ax.px(xs[k]) - bar_w / 2) << "\" y=\"" << num(kHeight - kMargin - hgt)
       << "\" width=\"" << num(bar_w) << "\" height=\"" << num(hgt) << "\" fill=\"#999\" opacity=\"0.4\"/>\n";
  }
  os << legend({"IC1", "IC2", "IC3"}) << "</svg>\n";
  return os.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
  if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace sdfm::svg
