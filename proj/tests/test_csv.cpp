#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>

#include "oracles.hpp"
#include "sparsedfm/csv.hpp"
#include "sparsedfm/error.hpp"

using namespace sdfm;

TEST_CASE("parse csv with index and missing cells") {
  std::istringstream in("time,a,b\n2020-01,1.5,NA\n2020-02,,2\n2020-03,3,4\n");
  const TimePanel p = parse_csv(in, true);
  CHECK(p.n() == 3);
  CHECK(p.p() == 2);
  CHECK(p.names[1] == "b");
  CHECK(p.index[2] == "2020-03");
  CHECK_FALSE(p.mask(0, 1));
  CHECK_FALSE(p.mask(1, 0));
  CHECK(p.values(2, 1) == 4.0);
}

TEST_CASE("csv errors name the offending cell") {
  std::istringstream bad("a,b\n1,x\n2,3\n");
  try {
    parse_csv(bad, false);
    FAIL("expected a DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("b") != std::string::npos);
  }
  std::istringstream ragged("a,b\n1,2\n3\n");
  CHECK_THROWS_AS(parse_csv(ragged, false), DataError);
  std::istringstream dup("a,a\n1,2\n3,4\n");
  CHECK_THROWS_AS(parse_csv(dup, false), DataError);
}

TEST_CASE("write then read is lossless") {
  Rng rng(11);
  MatrixXd m = oracle::random_matrix(rng, 7, 3) * 1e3;
  m(2, 1) = std::numeric_limits<double>::quiet_NaN();
  m(0, 0) = 1.0 / 3.0;
  const TimePanel p = TimePanel::from_matrix(m);
  const auto path = std::filesystem::temp_directory_path() / "sparsedfm_csv_roundtrip.csv";
  write_panel_csv(path, p);
  const TimePanel q = load_csv(path, true);
  std::filesystem::remove(path);
  CHECK(q.names == p.names);
  CHECK(q.index == p.index);
  CHECK(q.mask == p.mask);
  for (Eigen::Index t = 0; t < 7; ++t)
    for (Eigen::Index i = 0; i < 3; ++i)
      if (p.mask(t, i)) CHECK(q.values(t, i) == p.values(t, i));
  CHECK(format_double(std::nan("")) == "NA");
}
