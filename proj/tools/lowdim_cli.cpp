#include "lowdim/experiment.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

using lowdim::ErrorKind;
using nlohmann::json;
namespace ec = lowdim::exit_codes;

int error_exit(const lowdim::Error& e) {
  std::cerr << "error: " << e.what() << '\n';
  if (e.kind() == ErrorKind::Budget) return ec::kBudgetExceeded;
  if (e.kind() == ErrorKind::Config || e.kind() == ErrorKind::Dimension) return ec::kConfigError;
  return ec::kCheckFailed;
}

void print_report(const lowdim::ReportBundle& r) {
  std::cout << r.id << " [" << r.pipeline << "] " << (r.pass ? "PASS" : "FAIL") << "  hash " << r.config_hash << '\n';
  for (const auto& c : r.checks)
    std::cout << "  " << (c.pass ? "pass " : "FAIL ") << c.name << " = " << lowdim::csv_number(c.value)
              << (c.comparison == lowdim::Comparison::LessEqual ? " <= " : " >= ") << lowdim::csv_number(c.tolerance)
              << "  (" << c.wall_seconds << " s)\n";
  for (const auto& n : r.notes) std::cout << "  note: " << n << '\n';
  if (!r.error.empty()) std::cout << "  error: " << r.error << '\n';
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw lowdim::Error(ErrorKind::Config, "cannot read config file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw lowdim::Error(ErrorKind::Config, std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical experiments for degenerate elliptic operators with low-dimensional boundaries"};
  app.require_subcommand(1);

  std::string cfg_path, out_dir, param, values;
  unsigned workers = 0;

  auto* run = app.add_subcommand("run", "Run one experiment config");
  run->add_option("config", cfg_path, "Experiment config (JSON)")->required();
  run->add_option("-o,--output-dir", out_dir, "Override the output directory");

  auto* sweep = app.add_subcommand("sweep", "Run a config once per parameter value");
  sweep->add_option("config", cfg_path, "Experiment config (JSON)")->required();
  sweep->add_option("--param", param, "Dotted path of the parameter, e.g. params.eps")->required();
  sweep->add_option("--values", values, "JSON array or comma-separated list of values")->required();
  sweep->add_option("-o,--output-dir", out_dir, "Override the output directory");
  sweep->add_option("-j,--workers", workers, "Concurrent experiments (default: LOWDIM_WORKERS or all cores)");

  auto* list = app.add_subcommand("list", "List built-in experiment templates");

  std::string tmpl_id;
  auto* tmpl = app.add_subcommand("template", "Print the default config of a built-in experiment");
  tmpl->add_option("id", tmpl_id, "Experiment id")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ec::kConfigError;
  }

  try {
    if (*list) {
      for (const auto& e : lowdim::experiment_catalog())
        std::cout << e.id << "\t" << e.description << "\n\tanchor: " << e.anchor << '\n';
      return 0;
    }
    if (*tmpl) {
      for (const auto& e : lowdim::experiment_catalog()) {
        if (e.id != tmpl_id) continue;
        std::cout << e.default_config().dump(2) << '\n';
        return 0;
      }
      std::cerr << "error: unknown experiment '" << tmpl_id << "'\n";
      return ec::kConfigError;
    }
    json cfg = read_json(cfg_path);
    if (!out_dir.empty()) cfg["output_dir"] = out_dir;
    if (*run) {
      const auto report = lowdim::run_experiment(lowdim::ExperimentConfig::parse(cfg));
      print_report(report);
      return report.exit_code;
    }
    std::vector<json> vals;
    json parsed;
    try {
      parsed = json::parse(values);
    } catch (const json::parse_error&) {
      parsed = json::parse("[" + values + "]");
    }
    if (parsed.is_array())
      vals.assign(parsed.begin(), parsed.end());
    else
      vals.push_back(parsed);
    const auto res = lowdim::sweep(cfg, param, vals, workers);
    for (const auto& r : res.reports) print_report(r);
    std::cout << res.csv;
    return res.exit_code;
  } catch (const lowdim::Error& e) {
    return error_exit(e);
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ec::kConfigError;
  }
}
