#pragma once

#include "lowdim/boundary_geometry.hpp"
#include "lowdim/degenerate_solver.hpp"
#include "lowdim/elliptic_measure.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace lowdim {

enum class Comparison { LessEqual, GreaterEqual };

struct CheckSpec {
  std::string name;
  double tolerance = 0.0;
  bool mandatory = true;
};

/// Parsed experiment configuration (format in docs/formats.md).
struct ExperimentConfig {
  std::string id;
  std::string pipeline;
  std::uint64_t seed = 0;
  nlohmann::json boundary;
  nlohmann::json op;
  nlohmann::json grid;
  nlohmann::json budget;
  nlohmann::json params;
  std::vector<CheckSpec> checks;
  std::filesystem::path output_dir;
  nlohmann::json raw;

  /// Throws ErrorKind::Config on malformed input or unknown checks.
  static ExperimentConfig parse(const nlohmann::json& j);
  static ExperimentConfig load(const std::filesystem::path& path);
  /// FNV-1a of the canonical JSON dump (output_dir excluded), as 16 hex digits.
  std::string hash() const;
  nlohmann::json to_json() const;
};

struct CheckResult {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  Comparison comparison = Comparison::LessEqual;
  bool pass = false;
  bool mandatory = true;
  double wall_seconds = 0.0;
};

struct ReportBundle {
  std::string id;
  std::string pipeline;
  std::string anchor;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<CheckResult> checks;
  nlohmann::json environment;
  nlohmann::json summary;  // pipeline-specific measured quantities
  std::vector<std::string> outputs;
  std::map<std::string, std::string> csv_bodies;  // file name -> contents
  std::vector<std::string> notes;
  bool pass = false;
  int exit_code = 0;
  std::string error;

  nlohmann::json to_json() const;
  const CheckResult* check(const std::string& name) const;
};

/// Budget and grid settings shared by the pipelines.
struct Budget {
  std::size_t max_nodes = 3'000'000;
  std::size_t max_quadrature_nodes = kDefaultNodeBudget;
};

class PipelineContext {
 public:
  PipelineContext(const ExperimentConfig& cfg, ReportBundle& report);

  const ExperimentConfig& config() const { return cfg_; }
  const nlohmann::json& params() const { return cfg_.params; }
  template <class T>
  T param(const std::string& key, T fallback) const {
    return cfg_.params.contains(key) ? cfg_.params.at(key).get<T>() : fallback;
  }
  const Budget& budget() const { return budget_; }
  std::uint64_t seed() const { return cfg_.seed; }

  BoundarySet boundary() const;
  /// Grid options from the "grid" block (h_min, h_max, grading_ratio, band_width, jitter) and the budget.
  GridOptions grid_options() const;
  Box box() const;

  /// Records a measured value for a declared check; tolerance comes from the config when given.
  void check(const std::string& name, double value);
  /// Writes a CSV file into the output directory and registers it in the report.
  void write_csv(const std::string& name, const std::string& body);
  void note(const std::string& text);
  nlohmann::json& summary();

 private:
  const ExperimentConfig& cfg_;
  ReportBundle& report_;
  Budget budget_;
  std::chrono::steady_clock::time_point last_;
};

struct DeclaredCheck {
  std::string name;
  Comparison comparison;
  double default_tolerance;
  std::string description;
};

struct ExperimentInfo {
  std::string id;
  std::string description;
  std::string anchor;  // the statement the experiment reproduces
  std::string pipeline;
  std::vector<DeclaredCheck> checks;
  std::function<void(PipelineContext&)> run;
  /// Desk-scale default configuration.
  std::function<nlohmann::json()> default_config;
};

/// Built-in catalog (one template per acceptance property).
const std::vector<ExperimentInfo>& experiment_catalog();
const ExperimentInfo& find_pipeline(const std::string& pipeline);

/// Operator descriptor {"kind": model | weighted_identity | l_alpha | stretch_lift | constant_lift, ...}.
struct OperatorBuild {
  MatrixField field;
  AssemblyOptions assembly;
  std::string description;
};
OperatorBuild make_operator(const nlohmann::json& spec, const BoundarySet& gamma, const Budget& budget = {});

/// Radial stretch a = (1/K) r r^T + K (I - r r^T) about the origin of the closed upper half space.
HalfSpaceField radial_stretch_field(int d, double K);

/// Runs the pipeline, writes report.json and the CSV files into cfg.output_dir (when non-empty).
ReportBundle run_experiment(const ExperimentConfig& cfg);

/// Replaces the JSON value at a dotted path ("params.eps", "grid.h_min"); throws Config if absent.
nlohmann::json with_parameter(const nlohmann::json& config, const std::string& path, const nlohmann::json& value);

struct SweepResult {
  std::vector<ReportBundle> reports;
  std::string csv;  // parameter,value,check,measured,tolerance,pass
  int exit_code = 0;
};
/// Runs one experiment per value (concurrently up to `workers`, 0 = LOWDIM_WORKERS or hardware threads).
SweepResult sweep(const nlohmann::json& config, const std::string& path, const std::vector<nlohmann::json>& values,
                  unsigned workers = 0);

/// Worker cap from LOWDIM_WORKERS (default: hardware concurrency, at least 1).
unsigned worker_cap();

namespace exit_codes {
inline constexpr int kPass = 0;
inline constexpr int kCheckFailed = 1;
inline constexpr int kConfigError = 2;
inline constexpr int kBudgetExceeded = 3;
}  // namespace exit_codes

/// Deterministic CSV number formatting (17 significant digits).
std::string csv_number(double v);

}  // namespace lowdim
