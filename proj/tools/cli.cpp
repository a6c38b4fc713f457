#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sparsedfm/csv.hpp"
#include "sparsedfm/error.hpp"
#include "sparsedfm/model.hpp"
#include "sparsedfm/nowcast.hpp"
#include "sparsedfm/panel.hpp"
#include "sparsedfm/statespace.hpp"
#include "sparsedfm/svg.hpp"
#include "sparsedfm/tuning.hpp"

namespace sdfm::cli {

namespace fs = std::filesystem;

namespace {

struct IoFlags {
  std::string input;
  std::string outdir = ".";
  std::string index = "auto";
  bool plot = false;
};

struct FitFlags {
  int r = 0;
  int q = 0;
  std::string alphas = "-2:3:100";
  std::string alg = "EM-sparse";
  std::string err = "IID";
  std::string kalman;  // empty = univariate for IID, multivariate for AR1
  int max_iter = 100;
  double threshold = 1e-4;
  bool no_standardize = false;
  bool store_all_alphas = false;
  bool dump_config = false;
};

double parse_number(const std::string& text, const std::string& what) {
  double v = 0.0;
  const char* b = text.data();
  const char* e = b + text.size();
  const auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc{} || res.ptr != e) throw UsageError("invalid " + what + " '" + text + "'");
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) {
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

/// "lo:hi:count" is a log10 grid; otherwise one value or a comma list.
std::vector<double> parse_alphas(const std::string& spec) {
  const auto parts = split(spec, ':');
  if (spec.find(':') != std::string::npos) {
    if (parts.size() != 3) throw UsageError("--alphas expects lo:hi:count");
    const double count = parse_number(parts[2], "alpha count");
    if (count != std::floor(count)) throw UsageError("alpha count must be an integer");
    return logspace(parse_number(parts[0], "alpha exponent"), parse_number(parts[1], "alpha exponent"),
                    static_cast<int>(count));
  }
  std::vector<double> out;
  for (const auto& tok : split(spec, ',')) out.push_back(parse_number(tok, "alpha"));
  if (out.empty()) throw UsageError("--alphas is empty");
  return out;
}

FitConfig make_config(const FitFlags& f) {
  FitConfig cfg;
  cfg.r = f.r;
  cfg.q = f.q;
  cfg.alphas = parse_alphas(f.alphas);
  cfg.alg = algorithm_from_string(f.alg);
  cfg.err = error_model_from_string(f.err);
  if (!f.kalman.empty()) cfg.engine = kalman_engine_from_string(f.kalman);
  cfg.max_iter = f.max_iter;
  cfg.threshold = f.threshold;
  cfg.standardize = !f.no_standardize;
  cfg.store_all_alphas = f.store_all_alphas;
  return cfg;
}

nlohmann::json config_json(const FitConfig& cfg) {
  nlohmann::json j;
  j["r"] = cfg.r > 0 ? nlohmann::json(cfg.r) : nlohmann::json(nullptr);
  j["q"] = cfg.q;
  j["alg"] = std::string(to_string(cfg.alg));
  j["err"] = std::string(to_string(cfg.err));
  j["kalman"] = std::string(to_string(cfg.effective_engine()));
  j["alphas"] = cfg.alphas;
  j["max_iter"] = cfg.max_iter;
  j["threshold"] = cfg.threshold;
  j["standardize"] = cfg.standardize;
  j["store_all_alphas"] = cfg.store_all_alphas;
  return j;
}

void add_io(CLI::App* sub, IoFlags& io, bool needs_input = true) {
  auto* opt = sub->add_option("--input", io.input, "input CSV (header row; NA or empty = missing)");
  if (needs_input) opt->required()->check(CLI::ExistingFile);
  sub->add_option("--outdir", io.outdir, "output directory")->capture_default_str();
  sub->add_option("--index", io.index, "first column holds time labels: auto|yes|no")
      ->check(CLI::IsMember({"auto", "yes", "no"}))
      ->capture_default_str();
  sub->add_flag("--plot", io.plot, "also write SVG plots");
}

void add_fit(CLI::App* sub, FitFlags& f, bool r_required) {
  auto* r = sub->add_option("--r", f.r, "number of factors")->check(CLI::PositiveNumber);
  if (r_required) r->required();
  sub->add_option("--q", f.q, "leading variables exempt from the L1 penalty")->capture_default_str();
  sub->add_option("--alphas", f.alphas, "penalty grid: lo:hi:count (log10) or values")->capture_default_str();
  sub->add_option("--alg", f.alg, "PCA|2Stage|EM|EM-sparse")
      ->check(CLI::IsMember({"PCA", "2Stage", "EM", "EM-sparse"}))
      ->capture_default_str();
  sub->add_option("--err", f.err, "IID|AR1")->check(CLI::IsMember({"IID", "AR1"}))->capture_default_str();
  sub->add_option("--kalman", f.kalman, "univariate|multivariate (default univariate; multivariate with AR1)")
      ->check(CLI::IsMember({"univariate", "multivariate"}));
  sub->add_option("--max-iter", f.max_iter, "EM iteration cap")->capture_default_str();
  sub->add_option("--threshold", f.threshold, "EM convergence threshold")->capture_default_str();
  sub->add_flag("--no-standardize", f.no_standardize, "fit on the raw scale");
  sub->add_flag("--store-all-alphas", f.store_all_alphas, "keep the fit at every grid point");
}

TimePanel read_panel(const IoFlags& io) {
  bool has_index = io.index == "yes";
  if (io.index == "auto") {
    std::ifstream in(io.input);
    std::string header;
    std::getline(in, header);
    if (header.rfind("\xEF\xBB\xBF", 0) == 0) header.erase(0, 3);
    const auto cells = split_csv_line(header);
    std::string first = cells.empty() ? "" : cells.front();
    std::transform(first.begin(), first.end(), first.begin(), [](unsigned char c) { return std::tolower(c); });
    has_index = first.empty() || first == "time" || first == "date";
  }
  return load_csv(io.input, has_index);
}

fs::path prepare_outdir(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw DataError("cannot create output directory " + dir + ": " + ec.message());
  return p;
}

std::vector<std::string> factor_names(Eigen::Index r) {
  std::vector<std::string> out;
  for (Eigen::Index j = 0; j < r; ++j) out.push_back("F" + std::to_string(j + 1));
  return out;
}

std::vector<std::string> numbered(Eigen::Index count) {
  std::vector<std::string> out;
  for (Eigen::Index k = 0; k < count; ++k) out.push_back(std::to_string(k + 1));
  return out;
}

/// Reads a two-column "column,value" file into a per-column integer list.
/// Columns absent from the file get `fallback`.
std::vector<int> read_column_ints(const std::string& path, const TimePanel& panel, int fallback,
                                  const std::string& what) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + what + " file " + path);
  std::map<std::string, int> values;
  std::string line;
  bool header = true;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 2) throw DataError(what + " file line " + std::to_string(line_no) + ": expected column,value");
    if (header) {
      header = false;
      double probe = 0.0;
      const auto res = std::from_chars(cells[1].data(), cells[1].data() + cells[1].size(), probe);
      if (res.ec != std::errc{}) continue;  // a header row
    }
    const double v = parse_number(cells[1], what);
    if (v != std::floor(v)) throw DataError(what + " for '" + cells[0] + "' must be an integer");
    values[cells[0]] = static_cast<int>(v);
  }
  std::vector<int> out;
  for (const auto& name : panel.names) {
    auto it = values.find(name);
    if (it == values.end()) {
      if (fallback < 0) throw DataError(what + " file has no entry for column '" + name + "'");
      out.push_back(fallback);
    } else {
      out.push_back(it->second);
      values.erase(it);
    }
  }
  if (!values.empty()) throw DataError(what + " file names unknown column '" + values.begin()->first + "'");
  return out;
}

std::vector<TransformCode> read_codes(const std::string& path, const TimePanel& panel) {
  std::vector<TransformCode> codes;
  for (int c : read_column_ints(path, panel, -1, "transform code")) codes.push_back(transform_code_from_int(c));
  return codes;
}

void write_fit(const fs::path& dir, const FitResult& fit, bool plot, std::ostream& out) {
  const auto& names = fit.data.names;
  const auto& index = fit.data.index;
  const Eigen::Index r = fit.params.r();
  const auto fnames = factor_names(r);

  write_matrix_csv(dir / "factors.csv", fit.factors, fnames, index);
  write_matrix_csv(dir / "loadings.csv", fit.params.Lambda, fnames, names, "variable");
  if (fit.dynamic()) {
    write_matrix_csv(dir / "A.csv", fit.params.A, fnames, fnames, "factor");
    write_matrix_csv(dir / "sigma_u.csv", fit.params.Sigma_u, fnames, fnames, "factor");
  }
  write_matrix_csv(dir / "sigma_eps.csv", fit.params.sigma_eps, {"sigma_eps"}, names, "variable");
  if (fit.ar1) {
    MatrixXd ar(fit.params.p(), 2);
    ar.col(0) = fit.ar1->phi;
    ar.col(1) = fit.ar1->sigma_e;
    write_matrix_csv(dir / "ar1.csv", ar, {"phi", "sigma_e"}, names, "variable");
  }
  write_matrix_csv(dir / "fitted.csv", fit.fitted_unscaled, names, index);
  write_matrix_csv(dir / "residuals.csv", fit.residuals, names, index);

  const auto& log = fit.em_log;
  MatrixXd em(static_cast<Eigen::Index>(log.logliks.size()), 2);
  for (std::size_t k = 0; k < log.logliks.size(); ++k) {
    em(static_cast<Eigen::Index>(k), 0) = log.logliks[k];
    em(static_cast<Eigen::Index>(k), 1) = k == 0 ? std::nan("") : log.M[k - 1];
  }
  std::vector<std::string> iters;
  for (std::size_t k = 0; k < log.logliks.size(); ++k) iters.push_back(std::to_string(k));
  write_matrix_csv(dir / "emlog.csv", em, {"loglik", "M"}, iters, "iteration");

  MatrixXd ap(0, 7);
  if (fit.alpha_path) {
    const auto& pts = fit.alpha_path->points;
    ap.resize(static_cast<Eigen::Index>(pts.size()), 7);
    for (std::size_t k = 0; k < pts.size(); ++k) {
      const auto row = static_cast<Eigen::Index>(k);
      ap(row, 0) = pts[k].alpha;
      ap(row, 1) = pts[k].bic;
      ap(row, 2) = pts[k].V;
      ap(row, 3) = static_cast<double>(pts[k].nonzero);
      ap(row, 4) = pts[k].converged ? 1.0 : 0.0;
      ap(row, 5) = pts[k].em_iterations;
      ap(row, 6) = pts[k].degenerate ? 1.0 : 0.0;
    }
  }
  write_matrix_csv(dir / "alpha_path.csv", ap,
                   {"alpha", "bic", "V", "nonzero", "converged", "em_iterations", "degenerate"});

  if (!fit.alpha_fits.empty()) {
    const fs::path sub = dir / "alpha_fits";
    fs::create_directories(sub);
    for (std::size_t k = 0; k < fit.alpha_fits.size(); ++k) {
      write_matrix_csv(sub / ("loadings_" + std::to_string(k + 1) + ".csv"), fit.alpha_fits[k].params.Lambda, fnames,
                       names, "variable");
    }
  }

  if (plot) {
    svg::write_file(dir / "loadings.svg", svg::loading_heatmap(fit.params.Lambda, names));
    svg::write_file(dir / "factors.svg", svg::factor_lines(fit.factors));
    if (fit.alpha_path) svg::write_file(dir / "bic.svg", svg::bic_curve(*fit.alpha_path));
  }

  out << "alg=" << to_string(fit.config.alg) << " r=" << r;
  if (fit.dynamic()) out << " loglik=" << format_double(fit.loglik) << " em_iterations=" << log.iterations
                         << " converged=" << (log.converged ? "yes" : "no");
  if (fit.alpha_path) {
    out << " alpha_opt=" << format_double(fit.alpha_path->alpha_opt)
        << " nonzero=" << (fit.params.Lambda.array() != 0.0).count();
  }
  out << "\n";
}

FitResult fit_from_flags(const IoFlags& io, const FitFlags& f, std::ostream& err) {
  const TimePanel panel = read_panel(io);
  const FitConfig cfg = make_config(f);
  FitResult fit = sparse_dfm_fit(panel, cfg);
  for (const auto& w : fit.warnings) err << "warning: " << w << "\n";
  if (fit.dynamic() && !fit.em_log.converged && (cfg.alg == Algorithm::kEM || cfg.alg == Algorithm::kEMSparse)) {
    err << "warning: EM stopped at max_iter without converging\n";
  }
  return fit;
}

Eigen::Index resolve_row(const std::string& token, const TimePanel& panel) {
  for (std::size_t k = 0; k < panel.index.size(); ++k) {
    if (panel.index[k] == token) return static_cast<Eigen::Index>(k);
  }
  const double v = parse_number(token, "window row");
  if (v != std::floor(v) || v < 1 || v > static_cast<double>(panel.n())) {
    throw UsageError("window '" + token + "' is neither an index label nor a row number in 1.." +
                     std::to_string(panel.n()));
  }
  return static_cast<Eigen::Index>(v) - 1;
}

Eigen::Index resolve_column(const std::string& token, const TimePanel& panel) {
  for (std::size_t k = 0; k < panel.names.size(); ++k) {
    if (panel.names[k] == token) return static_cast<Eigen::Index>(k);
  }
  throw UsageError("unknown target column '" + token + "'");
}

void write_quantiles(std::ostream& os, const std::string& model, int horizon, const std::string& scale,
                     const QuantileSummary& s) {
  os << model << "," << horizon << "," << scale << "," << s.count << "," << format_double(s.mean) << ","
     << format_double(s.q0) << "," << format_double(s.q25) << "," << format_double(s.q50) << ","
     << format_double(s.q75) << "," << format_double(s.q100) << "\n";
}

int guarded(const std::function<void()>& body, std::ostream& err) {
  try {
    body();
    return kOk;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kData;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kNumerical;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << "\n";
    return kData;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse dynamic factor models: estimation, tuning, forecasting and nowcasting"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "show help for every subcommand");

  IoFlags io;
  FitFlags ff;

  auto* transform = app.add_subcommand("transform", "apply stationarity transforms from a codes file");
  add_io(transform, io);
  std::string codes_path;
  transform->add_option("--codes", codes_path, "CSV of column,code (1..7)")->required()->check(CLI::ExistingFile);

  auto* tune = app.add_subcommand("tune-factors", "Bai-Ng information criteria for the factor count");
  add_io(tune, io);
  int r_max = 0;
  int ic_type = 2;
  tune->add_option("--r-max", r_max, "largest r considered (default min(15, p-1))");
  tune->add_option("--ic", ic_type, "criterion used for the choice (1, 2 or 3)")
      ->check(CLI::Range(1, 3))
      ->capture_default_str();

  auto* fit = app.add_subcommand("fit", "estimate a factor model");
  add_io(fit, io, false);
  add_fit(fit, ff, false);
  fit->add_flag("--dump-config", ff.dump_config, "print the effective configuration as JSON and exit");

  auto* predict = app.add_subcommand("predict", "fit, then forecast h steps ahead");
  add_io(predict, io);
  add_fit(predict, ff, true);
  int horizon = 1;
  predict->set_help_flag("--help", "print this help message and exit");
  predict->add_option("--h", horizon, "forecast horizon")->check(CLI::PositiveNumber)->capture_default_str();

  auto* simulate = app.add_subcommand("simulate", "draw a panel from a dynamic factor model");
  SimulationConfig sim;
  std::string blocks;
  double ar1_phi = std::nan("");
  std::string sim_outdir = ".";
  simulate->add_option("--n", sim.n, "time points")->capture_default_str();
  simulate->add_option("--p", sim.p, "variables")->capture_default_str();
  simulate->add_option("--r", sim.r, "factors")->capture_default_str();
  simulate->add_option("--seed", sim.seed, "random seed")->capture_default_str();
  simulate->add_option("--missing", sim.missing_frac, "fraction of cells set missing")->capture_default_str();
  simulate->add_option("--ar1-phi", ar1_phi, "AR(1) coefficient of the idiosyncratic errors");
  simulate->add_option("--blocks", blocks, "block-sparse loadings: comma-separated block sizes summing to p");
  simulate->add_option("--outdir", sim_outdir, "output directory")->capture_default_str();

  auto* nowcast = app.add_subcommand("nowcast", "pseudo real-time expanding-window evaluation");
  add_io(nowcast, io);
  add_fit(nowcast, ff, true);
  std::string targets;
  std::string lags_path;
  std::string start;
  std::string end;
  std::string compare = "EM,EM-sparse";
  bool reuse = false;
  nowcast->add_option("--targets", targets, "comma-separated target column names")->required();
  nowcast->add_option("--lags", lags_path, "CSV of column,lag (publication lag in periods)")
      ->required()
      ->check(CLI::ExistingFile);
  nowcast->add_option("--codes", codes_path, "CSV of column,code; default 1 for every column")
      ->check(CLI::ExistingFile);
  nowcast->add_option("--start", start, "first window end (index label or 1-based row)")->required();
  nowcast->add_option("--end", end, "last window end (index label or 1-based row)")->required();
  nowcast->add_option("--compare", compare, "algorithms to compare")->capture_default_str();
  nowcast->add_flag("--reuse-params", reuse, "fit once at the first window, then only rerun the smoother");

  auto* missing = app.add_subcommand("missing", "summarize the missing-data pattern");
  add_io(missing, io);

  std::vector<std::string> argv_store;
  argv_store.reserve(args.size() + 1);
  argv_store.emplace_back("sparsedfm");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n\n";
    const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return kUsage;
  }

  if (*transform) {
    return guarded([&] {
      const TimePanel panel = read_panel(io);
      const TimePanel t = transform_data(panel, read_codes(codes_path, panel));
      const fs::path dir = prepare_outdir(io.outdir);
      write_panel_csv(dir / "transformed.csv", t);
      out << "wrote " << (dir / "transformed.csv").string() << "\n";
    }, err);
  }

  if (*tune) {
    return guarded([&] {
      const TimePanel panel = read_panel(io);
      const Eigen::Index rm = r_max > 0 ? r_max : default_r_max(panel.n(), panel.p());
      const IcTable tab = tune_factors(panel, rm, ic_type);
      const fs::path dir = prepare_outdir(io.outdir);
      MatrixXd m(static_cast<Eigen::Index>(tab.r.size()), 5);
      for (std::size_t k = 0; k < tab.r.size(); ++k) {
        const auto row = static_cast<Eigen::Index>(k);
        m.row(row) << tab.V[k], tab.ic1[k], tab.ic2[k], tab.ic3[k], tab.variance_share[k];
      }
      std::vector<std::string> rs;
      for (auto r : tab.r) rs.push_back(std::to_string(r));
      write_matrix_csv(dir / "ic.csv", m, {"V", "IC1", "IC2", "IC3", "variance_share"}, rs, "r");
      if (io.plot) svg::write_file(dir / "ic.svg", svg::ic_plot(tab));
      out << "chosen r: IC1=" << tab.chosen_ic1 << " IC2=" << tab.chosen_ic2 << " IC3=" << tab.chosen_ic3
          << " (using IC" << ic_type << ": " << tab.chosen() << ")\n";
    }, err);
  }

  if (*fit) {
    if (ff.dump_config) {
      return guarded([&] { out << config_json(make_config(ff)).dump(2) << "\n"; }, err);
    }
    if (io.input.empty() || ff.r == 0) {
      err << "usage error: fit requires --input and --r\n\n" << fit->help();
      return kUsage;
    }
    if (!fs::exists(io.input)) {
      err << "usage error: --input: file does not exist: " << io.input << "\n";
      return kUsage;
    }
    return guarded([&] {
      const FitResult res = fit_from_flags(io, ff, err);
      write_fit(prepare_outdir(io.outdir), res, io.plot, out);
    }, err);
  }

  if (*predict) {
    return guarded([&] {
      const FitResult res = fit_from_flags(io, ff, err);
      const Forecast fc = predict_h(res, horizon);
      const fs::path dir = prepare_outdir(io.outdir);
      const auto hs = numbered(horizon);
      write_matrix_csv(dir / "forecast.csv", fc.series, res.data.names, hs, "h");
      write_matrix_csv(dir / "forecast_factors.csv", fc.factors, factor_names(res.params.r()), hs, "h");
      out << "wrote " << horizon << "-step forecasts to " << (dir / "forecast.csv").string() << "\n";
    }, err);
  }

  if (*simulate) {
    return guarded([&] {
      if (!std::isnan(ar1_phi)) sim.ar1_phi = ar1_phi;
      if (!blocks.empty()) {
        for (const auto& tok : split(blocks, ',')) {
          sim.block_sizes.push_back(static_cast<Eigen::Index>(parse_number(tok, "block size")));
        }
      }
      const Simulation s = simulate_dfm(sim);
      const fs::path dir = prepare_outdir(sim_outdir);
      write_panel_csv(dir / "data.csv", s.panel);
      const auto fnames = factor_names(sim.r);
      write_matrix_csv(dir / "true_loadings.csv", s.params.Lambda, fnames, s.panel.names, "variable");
      write_matrix_csv(dir / "true_factors.csv", s.factors, fnames, s.panel.index);
      write_matrix_csv(dir / "true_A.csv", s.params.A, fnames, fnames, "factor");
      write_matrix_csv(dir / "true_sigma_u.csv", s.params.Sigma_u, fnames, fnames, "factor");
      write_matrix_csv(dir / "true_sigma_eps.csv", s.params.sigma_eps, {"sigma_eps"}, s.panel.names, "variable");
      out << "wrote " << (dir / "data.csv").string() << " (n=" << sim.n << ", p=" << sim.p << ", r=" << sim.r
          << ")\n";
    }, err);
  }

  if (*nowcast) {
    return guarded([&] {
      const TimePanel panel = read_panel(io);
      const FitConfig base = make_config(ff);
      HarnessConfig hc;
      for (const auto& t : split(targets, ',')) hc.targets.push_back(resolve_column(t, panel));
      hc.lags = read_column_ints(lags_path, panel, 0, "lag");
      if (codes_path.empty()) {
        hc.codes.assign(static_cast<std::size_t>(panel.p()), TransformCode::kNone);
      } else {
        hc.codes = read_codes(codes_path, panel);
      }
      hc.start = resolve_row(start, panel);
      hc.end = resolve_row(end, panel);
      hc.reuse_params = reuse;
      for (const auto& name : split(compare, ',')) {
        FitConfig c = base;
        c.alg = algorithm_from_string(name);
        hc.models.push_back(HarnessModel{name, c, std::nullopt});
      }
      const HarnessReport rep = run_harness(panel, hc);
      const fs::path dir = prepare_outdir(io.outdir);

      std::ofstream win(dir / "nowcast_windows.csv");
      win << "window,model,mae_h1,mae_h2,mae_std_h1,mae_std_h2,error\n";
      for (const auto& w : rep.windows) {
        for (std::size_t m = 0; m < rep.model_names.size(); ++m) {
          std::string msg = w.failure[m];
          std::replace(msg.begin(), msg.end(), ',', ';');
          std::replace(msg.begin(), msg.end(), '\n', ' ');
          win << w.label << "," << rep.model_names[m] << "," << format_double(w.mae[m][0]) << ","
              << format_double(w.mae[m][1]) << "," << format_double(w.mae_std[m][0]) << ","
              << format_double(w.mae_std[m][1]) << "," << msg << "\n";
        }
      }
      std::ofstream sum(dir / "nowcast_summary.csv");
      sum << "model,horizon,scale,windows,mean,min,q25,median,q75,max\n";
      for (std::size_t m = 0; m < rep.model_names.size(); ++m) {
        for (int h = 0; h < 2; ++h) {
          write_quantiles(sum, rep.model_names[m], h + 1, "raw", rep.summary[m][static_cast<std::size_t>(h)]);
          write_quantiles(sum, rep.model_names[m], h + 1, "standardized",
                          rep.summary_std[m][static_cast<std::size_t>(h)]);
        }
      }
      for (std::size_t m = 0; m < rep.model_names.size(); ++m) {
        out << rep.model_names[m] << ": mean MAE h1=" << format_double(rep.summary[m][0].mean)
            << " h2=" << format_double(rep.summary[m][1].mean) << "\n";
      }
    }, err);
  }

  if (*missing) {
    return guarded([&] {
      const TimePanel panel = read_panel(io);
      const auto rows = missing_summary(panel);
      const fs::path dir = prepare_outdir(io.outdir);
      std::ofstream os(dir / "missing_summary.csv");
      os << "column,missing,fraction,runs\n";
      for (const auto& row : rows) {
        os << row.column << "," << row.missing_count << ","
           << format_double(static_cast<double>(row.missing_count) / static_cast<double>(panel.n())) << ",";
        for (std::size_t k = 0; k < row.runs.size(); ++k) {
          if (k > 0) os << ";";
          os << panel.index[static_cast<std::size_t>(row.runs[k].first)] << "+" << row.runs[k].second;
        }
        os << "\n";
      }
      if (io.plot) svg::write_file(dir / "missing.svg", svg::missing_grid(panel));
      out << "wrote " << (dir / "missing_summary.csv").string() << "\n";
    }, err);
  }
  return kUsage;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace sdfm::cli
