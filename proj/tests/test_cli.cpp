#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "khess/cli.hpp"

using namespace khess::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("khess_test_cli_" + name);
  fs::remove_all(p);
  return p;
}

json read_json(const fs::path& p) {
  std::ifstream is(p);
  return json::parse(is);
}

}  // namespace

TEST(Config, DefaultsAndOverrides) {
  const RunConfig c = parse_config(json::parse(R"({"n": 3, "k": [1, 2], "seed": 7, "tol_scale": 2.0})"));
  EXPECT_EQ(c.n.value(), 3);
  EXPECT_EQ(c.k, (std::vector<int>{1, 2}));
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.radial_order, 16);
  EXPECT_EQ(c.angular_count, 4096);
  EXPECT_NO_THROW(validate(c));
}

TEST(Config, Rejections) {
  EXPECT_THROW(parse_config(json::parse(R"({"bogus": 1})")), khess::ValidationError);
  EXPECT_THROW(parse_config(json::parse(R"({"n": "three"})")), khess::ValidationError);
  RunConfig c;
  c.R = -1.0;
  EXPECT_THROW(validate(c), khess::ValidationError);
  c = RunConfig{};
  c.minimizer_method = "bfgs";
  EXPECT_THROW(validate(c), khess::ValidationError);
}

TEST(Config, FieldsAcceptNamesAndPolynomials) {
  const RunConfig c = parse_config(json::parse(
      R"({"fields": ["abs2", {"n": 2, "terms": [[[2, 0, 0, 0], 1.0, 0.0]]}]})"));
  const auto f = resolve_fields(c, 2);
  ASSERT_EQ(f.size(), 2u);
  EXPECT_TRUE(f[0] == khess::PolyField::abs2(2));
  EXPECT_TRUE(f[1] == khess::PolyField::x(2, 0) * khess::PolyField::x(2, 0));
}

TEST(Run, IdentitiesWritesReportAndSummary) {
  RunConfig c;
  c.out = scratch("identities").string();
  c.samples = 30;
  c.points = 10;
  std::ostringstream err;
  EXPECT_EQ(run_command("identities", c, err), kPass) << err.str();
  const json r = read_json(fs::path(c.out) / "identities_report.json");
  EXPECT_EQ(r["verdict"], "pass");
  EXPECT_EQ(r["header"]["command"], "identities");
  EXPECT_TRUE(r["header"].contains("timestamp"));
  EXPECT_EQ(r["config"]["n"], 3);
  EXPECT_FALSE(r["checks"].empty());
  std::ifstream csv(fs::path(c.out) / "identities_summary.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "check,k,n,value,reference,residual,tolerance,pass");
}

TEST(Run, SkipsOrdersAboveDimension) {
  RunConfig c;
  c.out = scratch("skip").string();
  c.n = 2;
  c.k = {1, 3};
  c.angular_count = 500;
  c.radial_order = 8;
  std::ostringstream err;
  EXPECT_EQ(run_command("energy", c, err), kPass) << err.str();
  const json r = read_json(fs::path(c.out) / "energy_report.json");
  ASSERT_EQ(r["skipped"].size(), 1u);
  EXPECT_EQ(r["skipped"][0]["k"], 3);
  EXPECT_TRUE(fs::exists(fs::path(c.out) / "boundary_density_k1.csv"));
}

TEST(Run, NonHermitianMatrixIsConfigError) {
  RunConfig c = parse_config(json::parse(R"({"matrices": [[[1, 2], [3, 1]]]})"));
  c.out = scratch("nonherm").string();
  std::ostringstream err;
  EXPECT_EQ(run_command("identities", c, err), kConfigError);
  EXPECT_NE(err.str().find("validation error"), std::string::npos);
}

TEST(Run, OracleLimitIsConfigError) {
  RunConfig c;
  c.oracle_n = 5;
  c.out = scratch("oracle").string();
  std::ostringstream err;
  EXPECT_EQ(run_command("identities", c, err), kConfigError);
  EXPECT_NE(err.str().find("oracle limit"), std::string::npos);
}

TEST(Run, CoarseRuleIsCalibrationError) {
  RunConfig c;
  c.n = 3;
  c.radial_order = 4;
  c.angular_count = 100;
  c.out = scratch("calib").string();
  std::ostringstream err;
  EXPECT_EQ(run_command("energy", c, err), kCalibrationError);
  EXPECT_NE(err.str().find("calibration"), std::string::npos);
}

TEST(Run, UnknownCommand) {
  RunConfig c;
  c.out = scratch("unknown").string();
  std::ostringstream err;
  EXPECT_EQ(run_command("solve", c, err), kConfigError);
}

TEST(Run, VerdictFailureExitCode) {
  // h = 0.9 leaves an O(h^2) truncation error far above the tolerance
  RunConfig c = parse_config(json::parse(R"({"families": [{"base": "abs2", "w": "const:1"}]})"));
  c.out = scratch("coarse_step").string();
  c.n = 2;
  c.k = {2};
  c.radial_order = 8;
  c.angular_count = 500;
  c.h = 0.9;
  std::ostringstream err;
  EXPECT_EQ(run_command("variation", c, err), kVerdictFailure);
  EXPECT_NE(err.str().find("FAIL variation: first_variation"), std::string::npos);
}
