#include "lowdim/experiment.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace lowdim;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json quick_config() {
  json j = experiment_catalog().front().default_config();
  for (const auto& e : experiment_catalog())
    if (e.id == "max_principle") j = e.default_config();
  j["params"]["samples"] = 3;
  return j;
}

ErrorKind parse_error_kind(const json& j) {
  try {
    ExperimentConfig::parse(j);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Precondition;
}

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("lowdim_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(Experiment, CatalogContents) {
  const auto& cat = experiment_catalog();
  EXPECT_FALSE(cat.empty());
  bool magic = false, comp = false;
  for (const auto& e : cat) {
    magic |= e.id == "magic_residual";
    comp |= e.id == "comparability_54";
    EXPECT_FALSE(e.anchor.empty()) << e.id;
    EXPECT_NO_THROW(ExperimentConfig::parse(e.default_config())) << e.id;
  }
  EXPECT_TRUE(magic);
  EXPECT_TRUE(comp);
}

TEST(Experiment, ConfigValidation) {
  json j = quick_config();
  j.erase("seed");
  EXPECT_EQ(parse_error_kind(j), ErrorKind::Config);
  j = quick_config();
  j["checks"] = {"no_such_check"};
  EXPECT_EQ(parse_error_kind(j), ErrorKind::Config);
  j = quick_config();
  j["pipeline"] = "nothing";
  EXPECT_EQ(parse_error_kind(j), ErrorKind::Config);
  j = quick_config();
  j["budget"].erase("max_nodes");
  EXPECT_EQ(parse_error_kind(j), ErrorKind::Config);
}

TEST(Experiment, MalformedFile) {
  const fs::path dir = temp_dir("malformed");
  fs::create_directories(dir);
  std::ofstream(dir / "bad.json") << "{ \"id\": ";
  try {
    ExperimentConfig::load(dir / "bad.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config);
  }
}

TEST(Experiment, HashIgnoresOutputDir) {
  json a = quick_config(), b = quick_config();
  b["output_dir"] = "/somewhere/else";
  EXPECT_EQ(ExperimentConfig::parse(a).hash(), ExperimentConfig::parse(b).hash());
  b["seed"] = 99;
  EXPECT_NE(ExperimentConfig::parse(a).hash(), ExperimentConfig::parse(b).hash());
}

TEST(Experiment, RunWritesReport) {
  json j = quick_config();
  const fs::path dir = temp_dir("run");
  j["output_dir"] = dir.string();
  const ReportBundle r = run_experiment(ExperimentConfig::parse(j));
  EXPECT_TRUE(r.pass) << r.error;
  EXPECT_EQ(r.exit_code, exit_codes::kPass);
  ASSERT_TRUE(fs::exists(dir / "report.json"));
  ASSERT_TRUE(fs::exists(dir / "max_principle.csv"));
  std::ifstream in(dir / "report.json");
  const json rep = json::parse(in);
  EXPECT_EQ(rep.at("anchor").get<std::string>(), "maximum principle for L-solutions");
  EXPECT_EQ(rep.at("checks").size(), 1U);
}

TEST(Experiment, FailedCheckExitsOne) {
  json j = quick_config();
  j["checks"] = {{{"name", "max_violation"}, {"tolerance", -1.0}}};
  const ReportBundle r = run_experiment(ExperimentConfig::parse(j));
  EXPECT_FALSE(r.pass);
  EXPECT_EQ(r.exit_code, exit_codes::kCheckFailed);
}

TEST(Experiment, NonMandatoryFailureStillPasses) {
  json j = quick_config();
  j["checks"] = {{{"name", "max_violation"}, {"tolerance", -1.0}, {"mandatory", false}}};
  EXPECT_TRUE(run_experiment(ExperimentConfig::parse(j)).pass);
}

TEST(Experiment, BudgetExceededExitsThree) {
  json j = quick_config();
  j["budget"]["max_nodes"] = 10;
  const ReportBundle r = run_experiment(ExperimentConfig::parse(j));
  EXPECT_EQ(r.exit_code, exit_codes::kBudgetExceeded);
  EXPECT_FALSE(r.pass);
}

TEST(Experiment, ConfigErrorInsidePipelineExitsTwo) {
  json j = quick_config();
  j["operator"] = {{"kind", "warp_drive"}};
  EXPECT_EQ(run_experiment(ExperimentConfig::parse(j)).exit_code, exit_codes::kConfigError);
}

TEST(Experiment, FlatMagicResidual) {
  json j;
  for (const auto& e : experiment_catalog())
    if (e.id == "magic_residual") j = e.default_config();
  j["boundary"] = {{"kind", "plane"}, {"d", 1}, {"n", 4}};
  j["params"]["samples"] = 20;
  j["params"]["levels"] = 2;
  j["checks"] = {{{"name", "max_residual"}, {"tolerance", 1e-6}}};
  const ReportBundle r = run_experiment(ExperimentConfig::parse(j));
  EXPECT_TRUE(r.pass) << r.error;
}

TEST(Experiment, WithParameter) {
  const json j = quick_config();
  EXPECT_EQ(with_parameter(j, "params.samples", 7)["params"]["samples"], 7);
  EXPECT_EQ(with_parameter(j, "grid.h_min", 0.5)["grid"]["h_min"], 0.5);
  EXPECT_THROW(with_parameter(j, "params.missing", 1), Error);
}

TEST(Experiment, SweepStacksResults) {
  const SweepResult s = sweep(quick_config(), "params.samples", {json(1), json(2)}, 1);
  ASSERT_EQ(s.reports.size(), 2U);
  EXPECT_EQ(s.exit_code, 0);
  EXPECT_EQ(std::count(s.csv.begin(), s.csv.end(), '\n'), 3);
  try {
    sweep(quick_config(), "params.samples", {}, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config);
  }
}

TEST(Experiment, Determinism) {
  const ExperimentConfig c = ExperimentConfig::parse(quick_config());
  EXPECT_EQ(run_experiment(c).csv_bodies, run_experiment(c).csv_bodies);
}

TEST(Experiment, CsvNumbersRoundTrip) {
  const double v = 0.1 + 0.2;
  EXPECT_EQ(std::stod(csv_number(v)), v);
}
