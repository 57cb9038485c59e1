#include "geoprof/io.hpp"
#include "geoprof/parameters.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace geoprof;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::vector<std::string> kNames{"(Intercept)", "elev", "slope"};

}  // namespace

TEST(FormatDouble, RoundTripsAndSpecialValues) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.125, 1e22}) {
    EXPECT_EQ(std::stod(formatDouble(v)), v);
  }
  EXPECT_EQ(formatDouble(NAN), "NA");
  EXPECT_EQ(formatDouble(INFINITY), "Inf");
  EXPECT_EQ(formatDouble(-INFINITY), "-Inf");
  EXPECT_EQ(formatDouble(0.5), "0.5");
}

TEST(Parameters, NamesAndParsing) {
  EXPECT_EQ(paramName({Param::beta, 1}, kNames), "elev");
  EXPECT_EQ(paramName({Param::beta, 7}, kNames), "beta7");
  EXPECT_EQ(paramNotation({Param::beta, 0}), "beta_0");
  EXPECT_EQ(paramName({Param::sdNugget, 0}, kNames), "sdNugget");

  EXPECT_EQ(parseParam("elev", kNames), (ParamRef{Param::beta, 1}));
  EXPECT_EQ(parseParam("beta0", kNames), (ParamRef{Param::beta, 0}));
  EXPECT_EQ(parseParam("beta2", kNames), (ParamRef{Param::beta, 2}));
  EXPECT_FALSE(parseParam("beta3", kNames));
  EXPECT_FALSE(parseParam("beta1x", kNames));
  EXPECT_EQ(parseParam("gamma2", kNames), (ParamRef{Param::aniso1, 0}));
  EXPECT_EQ(parseParam("lambda", kNames), (ParamRef{Param::boxcox, 0}));
  EXPECT_EQ(parseParam("nu", kNames), (ParamRef{Param::nuInternal, 0}));
  EXPECT_FALSE(parseParam("bogus", kNames));

  for (const auto& n : validParamNames(kNames)) EXPECT_TRUE(parseParam(n, kNames)) << n;
}

TEST(Parameters, TableOrderAndBounds) {
  const auto rows = tableParams(2);
  ASSERT_EQ(rows.size(), 13u);
  EXPECT_EQ(rows[0], (ParamRef{Param::beta, 0}));
  EXPECT_EQ(rows[1], (ParamRef{Param::beta, 1}));
  EXPECT_EQ(rows[2].kind, Param::sdSpatial);
  EXPECT_EQ(rows.back().kind, Param::boxcox);

  EXPECT_EQ(physicalLowerBound({Param::nugget, 0}), 0.0);
  EXPECT_EQ(physicalLowerBound({Param::anisoRatio, 0}), 1.0);
  EXPECT_FALSE(physicalLowerBound({Param::range, 0}));
  EXPECT_TRUE(isCorrelationParam({Param::range, 0}));
  EXPECT_FALSE(isCorrelationParam({Param::beta, 0}));
  EXPECT_FALSE(isCorrelationParam({Param::sdSpatial, 0}));
}

TEST(Parameters, CorrelationValues) {
  const NaturalParams p(4.0, 2.0, 0.3, 1.5, 0.25);
  EXPECT_DOUBLE_EQ(correlationValue({Param::range, 0}, p), 4.0);
  EXPECT_DOUBLE_EQ(correlationValue({Param::anisoRatio, 0}, p), 2.0);
  EXPECT_NEAR(correlationValue({Param::combinedRange, 0}, p), std::sqrt(8.0), 1e-14);
  EXPECT_DOUBLE_EQ(correlationValue({Param::nugget, 0}, p), 0.25);
  EXPECT_DOUBLE_EQ(correlationValue({Param::shape, 0}, p), 1.5);
}

TEST(Io, CurveAndTableCsv) {
  const auto dir = std::filesystem::temp_directory_path() / "geoprof_io_test";
  std::filesystem::create_directories(dir);

  ProfileCurve c;
  c.abscissa = {0.0, 0.5, 1.0};
  c.pll = {-1.0, 0.0, -INFINITY};
  c.isHullVertex = {true, true, false};
  writeCurveCsv(c, (dir / "c.csv").string());
  EXPECT_EQ(slurp((dir / "c.csv").string()), "abscissa,pll,isHullVertex\n0,-1,1\n0.5,0,1\n1,-Inf,0\n");

  CiRow r;
  r.name = "a,b";
  r.notation = "beta_1";
  r.estimate = 1.25;
  r.likelihood.lo = 1.0;
  r.likelihood.hi = 2.0;
  r.likelihood.hiOpen = true;
  writeCiTableCsv({r}, (dir / "t.csv").string());
  const std::string t = slurp((dir / "t.csv").string());
  EXPECT_NE(t.find("\"a,b\",beta_1,1.25,1,>2,NA,NA"), std::string::npos) << t;

  const nlohmann::json j{{"x", 1.5}, {"v", {1, 2}}};
  writeJson(j, (dir / "j.json").string());
  EXPECT_EQ(readJson((dir / "j.json").string()), j);
  std::filesystem::remove_all(dir);
}

TEST(Io, TextTableListsEveryRow) {
  CiRow a, b;
  a.name = "range";
  b.name = "shape";
  a.likelihood.lo = 1.0;
  a.likelihood.hi = 3.0;
  const std::string s = formatCiTable({a, b});
  EXPECT_NE(s.find("range"), std::string::npos);
  EXPECT_NE(s.find("shape"), std::string::npos);
}
