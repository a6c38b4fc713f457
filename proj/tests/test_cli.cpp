#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "sparsedfm/csv.hpp"

namespace fs = std::filesystem;

namespace {

fs::path tmp_root() {
  const char* env = std::getenv("SPARSEDFM_TEST_TMP");
  fs::path root = env ? fs::path(env) : fs::temp_directory_path() / "sparsedfm_cli_tests";
  fs::create_directories(root);
  return root;
}

int run(std::vector<std::string> args, std::string* out = nullptr, std::string* err = nullptr) {
  std::ostringstream o, e;
  const int code = sdfm::cli::run(args, o, e);
  if (out) *out = o.str();
  if (err) *err = e.str();
  return code;
}

}  // namespace

TEST_CASE("fit without --r is a usage error") {
  const fs::path dir = tmp_root() / "nor";
  REQUIRE(run({"simulate", "--n", "40", "--p", "6", "--r", "1", "--outdir", dir.string()}) == 0);
  std::string err;
  CHECK(run({"fit", "--input", (dir / "data.csv").string()}, nullptr, &err) == 1);
  CHECK(err.find("--r") != std::string::npos);
  CHECK(run({"fit", "--bogus"}) == 1);
  CHECK(run({}) == 1);
}

TEST_CASE("simulate then EM fit gives a monotone emlog") {
  const fs::path dir = tmp_root() / "em";
  REQUIRE(run({"simulate", "--n", "80", "--p", "10", "--r", "2", "--seed", "3", "--missing", "0.1", "--outdir",
               dir.string()}) == 0);
  REQUIRE(run({"fit", "--input", (dir / "data.csv").string(), "--r", "2", "--alg", "EM", "--outdir",
               (dir / "fit").string()}) == 0);
  const sdfm::TimePanel em = sdfm::load_csv(dir / "fit" / "emlog.csv", true);
  for (Eigen::Index k = 1; k < em.n(); ++k) CHECK(em.values(k, 0) >= em.values(k - 1, 0) - 1e-6);
}

TEST_CASE("EM-sparse fit writes every output and they parse back") {
  const fs::path dir = tmp_root() / "sparse";
  REQUIRE(run({"simulate", "--n", "60", "--p", "10", "--r", "3", "--seed", "2", "--outdir", dir.string()}) == 0);
  std::string out;
  REQUIRE(run({"fit", "--input", (dir / "data.csv").string(), "--r", "3", "--alg", "EM-sparse", "--alphas",
               "-2:1:5", "--plot", "--outdir", (dir / "fit").string()},
              &out) == 0);
  CHECK(out.find("alpha_opt") != std::string::npos);
  for (const char* f : {"factors.csv", "loadings.csv", "A.csv", "sigma_u.csv", "sigma_eps.csv", "fitted.csv",
                        "residuals.csv", "emlog.csv"}) {
    const fs::path p = dir / "fit" / f;
    REQUIRE(fs::exists(p));
    CHECK_NOTHROW(sdfm::load_csv(p, true));
  }
  CHECK_NOTHROW(sdfm::load_csv(dir / "fit" / "alpha_path.csv", false));
  CHECK(fs::exists(dir / "fit" / "loadings.svg"));
  CHECK(fs::exists(dir / "fit" / "bic.svg"));

  const sdfm::TimePanel l = sdfm::load_csv(dir / "fit" / "loadings.csv", true);
  CHECK(l.n() == 10);
  CHECK(l.p() == 3);
}

TEST_CASE("predict, transform, tune-factors, missing") {
  const fs::path dir = tmp_root() / "misc";
  REQUIRE(run({"simulate", "--n", "60", "--p", "8", "--r", "2", "--seed", "4", "--missing", "0.05", "--outdir",
               dir.string()}) == 0);
  const std::string data = (dir / "data.csv").string();
  CHECK(run({"predict", "--input", data, "--r", "2", "--alg", "EM", "--h", "3", "--outdir", dir.string()}) == 0);
  const sdfm::TimePanel fc = sdfm::load_csv(dir / "forecast.csv", true);
  CHECK(fc.n() == 3);
  CHECK(fc.p() == 8);

  CHECK(run({"tune-factors", "--input", data, "--plot", "--outdir", dir.string()}) == 0);
  CHECK(fs::exists(dir / "ic.csv"));
  CHECK(fs::exists(dir / "ic.svg"));

  CHECK(run({"missing", "--input", data, "--outdir", dir.string()}) == 0);
  CHECK(fs::exists(dir / "missing_summary.csv"));

  {
    std::ofstream codes(dir / "codes.csv");
    codes << "column,code\n";
    for (int i = 1; i <= 8; ++i) codes << "V" << i << "," << (i == 1 ? 2 : 1) << "\n";
  }
  CHECK(run({"transform", "--input", data, "--codes", (dir / "codes.csv").string(), "--outdir", dir.string()}) == 0);
  const sdfm::TimePanel t = sdfm::load_csv(dir / "transformed.csv", true);
  CHECK_FALSE(t.mask(0, 0));

  std::ofstream bad_codes(dir / "bad_codes.csv");
  bad_codes << "column,code\nV1,9\n";
  bad_codes.close();
  CHECK(run({"transform", "--input", data, "--codes", (dir / "bad_codes.csv").string(), "--outdir", dir.string()}) == 2);
}

TEST_CASE("malformed input is a data error") {
  const fs::path dir = tmp_root() / "bad";
  fs::create_directories(dir);
  std::ofstream(dir / "bad.csv") << "a,b\n1,2\n3,oops\n";
  CHECK(run({"fit", "--input", (dir / "bad.csv").string(), "--r", "1", "--outdir", dir.string()}) == 2);
}

TEST_CASE("dump-config reports the defaults") {
  std::string out;
  REQUIRE(run({"fit", "--dump-config"}, &out) == 0);
  const auto j = nlohmann::json::parse(out);
  CHECK(j["alg"] == "EM-sparse");
  CHECK(j["err"] == "IID");
  CHECK(j["kalman"] == "univariate");
  CHECK(j["max_iter"] == 100);
  CHECK(j["threshold"].get<double>() == 1e-4);
  CHECK(j["q"] == 0);
  CHECK(j["standardize"] == true);
  CHECK(j["alphas"].size() == 100);
}
