#include "lowdim/experiment.hpp"

#include "lowdim/operator_fields.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace lowdim {

namespace fs = std::filesystem;
using nlohmann::json;

std::string csv_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Configuration

namespace {

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorKind::Config, what); }

const json& require(const json& j, const char* key, json::value_t type, const char* type_name) {
  if (!j.contains(key)) config_error(std::string("missing field '") + key + "'");
  const json& v = j.at(key);
  const bool ok = type == json::value_t::number_float ? v.is_number() : v.type() == type;
  if (!ok) config_error(std::string("field '") + key + "' must be " + type_name);
  return v;
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(const json& j) {
  if (!j.is_object()) config_error("experiment config must be a JSON object");
  ExperimentConfig c;
  c.raw = j;
  c.id = require(j, "id", json::value_t::string, "a string").get<std::string>();
  c.pipeline = require(j, "pipeline", json::value_t::string, "a string").get<std::string>();
  const json& seed = j.contains("seed") ? j.at("seed") : json();
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0))
    config_error("field 'seed' is mandatory and must be a non-negative integer");
  c.seed = seed.get<std::uint64_t>();
  c.budget = require(j, "budget", json::value_t::object, "an object");
  if (!c.budget.contains("max_nodes") || !c.budget.at("max_nodes").is_number() || c.budget.at("max_nodes").get<double>() <= 0)
    config_error("budget.max_nodes must be a positive number");
  for (const char* key : {"boundary", "operator", "grid", "params"}) {
    if (j.contains(key) && !j.at(key).is_object()) config_error(std::string("field '") + key + "' must be an object");
  }
  c.boundary = j.value("boundary", json::object());
  c.op = j.value("operator", json::object());
  c.grid = j.value("grid", json::object());
  c.params = j.value("params", json::object());
  if (j.contains("output_dir")) {
    if (!j.at("output_dir").is_string()) config_error("field 'output_dir' must be a string");
    c.output_dir = j.at("output_dir").get<std::string>();
  }

  const ExperimentInfo* info = nullptr;
  try {
    info = &find_pipeline(c.pipeline);
  } catch (const Error&) {
    config_error("unknown pipeline '" + c.pipeline + "'");
  }
  if (j.contains("checks")) {
    if (!j.at("checks").is_array()) config_error("field 'checks' must be an array");
    for (const json& cj : j.at("checks")) {
      CheckSpec s;
      if (cj.is_string()) {
        s.name = cj.get<std::string>();
      } else if (cj.is_object()) {
        s.name = require(cj, "name", json::value_t::string, "a string").get<std::string>();
        s.mandatory = cj.value("mandatory", true);
      } else {
        config_error("check entries must be names or objects");
      }
      auto it = std::find_if(info->checks.begin(), info->checks.end(),
                             [&](const DeclaredCheck& d) { return d.name == s.name; });
      if (it == info->checks.end()) config_error("pipeline '" + c.pipeline + "' has no check '" + s.name + "'");
      s.tolerance = it->default_tolerance;
      if (cj.is_object() && cj.contains("tolerance")) {
        if (!cj.at("tolerance").is_number()) config_error("check tolerance must be a number");
        s.tolerance = cj.at("tolerance").get<double>();
      }
      c.checks.push_back(s);
    }
  } else {
    for (const auto& d : info->checks) c.checks.push_back({d.name, d.default_tolerance, true});
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot read config file '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    config_error(std::string("malformed JSON in '") + path.string() + "': " + e.what());
  }
  return parse(j);
}

json ExperimentConfig::to_json() const {
  json j = raw;
  j.erase("output_dir");
  return j;
}

std::string ExperimentConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(to_json().dump())));
  return buf;
}

// ---------------------------------------------------------------------------
// Reports

namespace {

const char* comparison_symbol(Comparison c) { return c == Comparison::LessEqual ? "<=" : ">="; }

json environment_stamp() {
  json e;
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  e["timestamp"] = buf;
#ifdef __VERSION__
  e["compiler"] = __VERSION__;
#endif
  e["workers"] = worker_cap();
  e["hardware_threads"] = std::thread::hardware_concurrency();
  return e;
}

}  // namespace

json ReportBundle::to_json() const {
  json j;
  j["id"] = id;
  j["pipeline"] = pipeline;
  j["anchor"] = anchor;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  j["pass"] = pass;
  j["exit_code"] = exit_code;
  if (!error.empty()) j["error"] = error;
  j["checks"] = json::array();
  for (const auto& c : checks) {
    j["checks"].push_back({{"name", c.name},
                           {"value", c.value},
                           {"tolerance", c.tolerance},
                           {"comparison", comparison_symbol(c.comparison)},
                           {"pass", c.pass},
                           {"mandatory", c.mandatory},
                           {"wall_seconds", c.wall_seconds}});
  }
  j["summary"] = summary.is_null() ? json::object() : summary;
  j["outputs"] = outputs;
  j["notes"] = notes;
  j["environment"] = environment;
  return j;
}

const CheckResult* ReportBundle::check(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

// ---------------------------------------------------------------------------
// Pipeline context

PipelineContext::PipelineContext(const ExperimentConfig& cfg, ReportBundle& report)
    : cfg_(cfg), report_(report), last_(std::chrono::steady_clock::now()) {
  budget_.max_nodes = static_cast<std::size_t>(cfg.budget.at("max_nodes").get<double>());
  if (cfg.budget.contains("max_quadrature_nodes"))
    budget_.max_quadrature_nodes = static_cast<std::size_t>(cfg.budget.at("max_quadrature_nodes").get<double>());
}

BoundarySet PipelineContext::boundary() const {
  if (cfg_.boundary.empty()) config_error("experiment needs a 'boundary' descriptor");
  return make_boundary(cfg_.boundary);
}

GridOptions PipelineContext::grid_options() const {
  GridOptions o;
  try {
    o.h_min = cfg_.grid.value("h_min", o.h_min);
    o.h_max = cfg_.grid.value("h_max", o.h_max);
    o.grading_ratio = cfg_.grid.value("grading_ratio", o.grading_ratio);
    o.band_width = cfg_.grid.value("band_width", o.band_width);
    o.jitter = cfg_.grid.value("jitter", o.jitter);
  } catch (const json::exception& e) {
    config_error(std::string("grid block: ") + e.what());
  }
  o.max_nodes = budget_.max_nodes;
  return o;
}

Box PipelineContext::box() const {
  if (!cfg_.grid.contains("box")) config_error("grid.box is required");
  try {
    const auto lo = cfg_.grid.at("box").at("lo").get<std::vector<double>>();
    const auto hi = cfg_.grid.at("box").at("hi").get<std::vector<double>>();
    if (lo.size() != hi.size()) config_error("grid.box lo/hi sizes differ");
    return Box(Eigen::Map<const Vec>(lo.data(), static_cast<Eigen::Index>(lo.size())),
               Eigen::Map<const Vec>(hi.data(), static_cast<Eigen::Index>(hi.size())));
  } catch (const json::exception& e) {
    config_error(std::string("grid.box: ") + e.what());
  }
}

void PipelineContext::check(const std::string& name, double value) {
  const auto now = std::chrono::steady_clock::now();
  const double wall = std::chrono::duration<double>(now - last_).count();
  last_ = now;
  const ExperimentInfo& info = find_pipeline(cfg_.pipeline);
  auto decl = std::find_if(info.checks.begin(), info.checks.end(), [&](const DeclaredCheck& d) { return d.name == name; });
  if (decl == info.checks.end()) throw Error(ErrorKind::Precondition, "pipeline reported undeclared check " + name);
  report_.summary["measured"][name] = value;
  for (const auto& spec : cfg_.checks) {
    if (spec.name != name) continue;
    CheckResult r;
    r.name = name;
    r.value = value;
    r.tolerance = spec.tolerance;
    r.comparison = decl->comparison;
    r.mandatory = spec.mandatory;
    r.wall_seconds = wall;
    r.pass = std::isfinite(value) &&
             (decl->comparison == Comparison::LessEqual ? value <= spec.tolerance : value >= spec.tolerance);
    report_.checks.push_back(r);
  }
}

void PipelineContext::write_csv(const std::string& name, const std::string& body) {
  report_.csv_bodies[name] = body;
  report_.outputs.push_back(name);
  if (cfg_.output_dir.empty()) return;
  fs::create_directories(cfg_.output_dir);
  std::ofstream out(cfg_.output_dir / name, std::ios::binary);
  out << body;
}

void PipelineContext::note(const std::string& text) { report_.notes.push_back(text); }

json& PipelineContext::summary() { return report_.summary; }

// ---------------------------------------------------------------------------
// Operators

HalfSpaceField radial_stretch_field(int d, double K) {
  if (!(K > 0.0)) throw Error(ErrorKind::Config, "stretch factor must be positive");
  HalfSpaceField f;
  f.d = d;
  f.matrix = [d, K](const Vec& x, double s) -> Mat {
    Vec r(d + 1);
    r.head(d) = x;
    r[d] = s;
    const double len = r.norm();
    if (len == 0.0) return Mat::Identity(d + 1, d + 1);
    r /= len;
    const Mat P = r * r.transpose();
    return P / K + K * (Mat::Identity(d + 1, d + 1) - P);
  };
  std::ostringstream os;
  os << "radial_stretch(K=" << K << ")";
  f.description = os.str();
  return f;
}

OperatorBuild make_operator(const json& spec, const BoundarySet& gamma, const Budget& budget) {
  OperatorBuild out;
  try {
    const std::string kind = spec.at("kind").get<std::string>();
    const int n = gamma.n();
    if (kind == "model") {
      if (!gamma.is_plane()) config_error("the model operator needs a flat boundary");
      out.field = model_field(gamma.param_dim(), n);
    } else if (kind == "weighted_identity") {
      const ScalarField w = weight_w(gamma, WeightMode::Euclidean);
      out.field.n = n;
      out.field.scalar = w.value;
      out.field.weight = w.value;
      out.field.smoothness = 1;
      out.field.description = "delta^{d+1-n} Id";
    } else if (kind == "l_alpha") {
      const double alpha = spec.value("alpha", n - gamma.d() - 2.0);
      if (!(alpha > 0.0)) config_error("l_alpha needs alpha > 0");
      const int level = spec.value("level", gamma.is_cantor() ? 10 : 12);
      Box window;
      if (gamma.is_cantor()) {
        const double r = gamma.hull_radius();
        window = Box(gamma.hull_center().array() - r, gamma.hull_center().array() + r);
      } else {
        const double half = spec.value("window", 12.0);
        window = Box::cube(gamma.param_dim(), -half, half);
      }
      const QuadratureRule rule = sigma_quadrature(gamma, level, window, budget.max_quadrature_nodes);
      out.field = build_L_alpha(gamma, rule, alpha).field;
      out.assembly.interpolate_reduced = true;
    } else if (kind == "stretch_lift") {
      if (!gamma.is_plane()) config_error("stretch_lift needs a flat boundary");
      out.field = lift_codim1(radial_stretch_field(gamma.param_dim(), spec.at("stretch").get<double>()), n);
    } else if (kind == "constant_lift") {
      if (!gamma.is_plane()) config_error("constant_lift needs a flat boundary");
      const auto rows = spec.at("matrix").get<std::vector<std::vector<double>>>();
      const int m = gamma.param_dim() + 1;
      if (static_cast<int>(rows.size()) != m) config_error("constant_lift matrix must be (d+1) x (d+1)");
      Mat A(m, m);
      for (int i = 0; i < m; ++i) {
        if (static_cast<int>(rows[static_cast<std::size_t>(i)].size()) != m)
          config_error("constant_lift matrix must be (d+1) x (d+1)");
        for (int k = 0; k < m; ++k) A(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
      }
      out.field = lift_codim1(constant_half_space_field(A), n);
    } else {
      config_error("unknown operator kind '" + kind + "'");
    }
  } catch (const json::exception& e) {
    config_error(std::string("operator descriptor: ") + e.what());
  }
  out.description = out.field.description;
  return out;
}

// ---------------------------------------------------------------------------
// Running

ReportBundle run_experiment(const ExperimentConfig& cfg) {
  ReportBundle rep;
  rep.id = cfg.id;
  rep.pipeline = cfg.pipeline;
  rep.config_hash = cfg.hash();
  rep.seed = cfg.seed;
  rep.environment = environment_stamp();
  rep.summary = json::object();
  const ExperimentInfo& info = find_pipeline(cfg.pipeline);
  rep.anchor = info.anchor;
  for (const auto& e : experiment_catalog())
    if (e.id == cfg.id && e.pipeline == cfg.pipeline) rep.anchor = e.anchor;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    PipelineContext ctx(cfg, rep);
    info.run(ctx);
  } catch (const Error& e) {
    rep.error = std::string(to_string(e.kind())) + ": " + e.what();
    rep.exit_code = e.kind() == ErrorKind::Budget ? exit_codes::kBudgetExceeded
                    : e.kind() == ErrorKind::Config || e.kind() == ErrorKind::Dimension ? exit_codes::kConfigError
                                                                                         : exit_codes::kCheckFailed;
  } catch (const json::exception& e) {
    rep.error = std::string("Config: ") + e.what();
    rep.exit_code = exit_codes::kConfigError;
  } catch (const std::exception& e) {
    rep.error = e.what();
    rep.exit_code = exit_codes::kCheckFailed;
  }
  rep.environment["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  bool pass = rep.error.empty();
  for (const auto& spec : cfg.checks) {
    const CheckResult* r = rep.check(spec.name);
    if (!r) {
      if (rep.error.empty()) rep.notes.push_back("check '" + spec.name + "' was not evaluated");
      if (spec.mandatory) pass = false;
    } else if (r->mandatory && !r->pass) {
      pass = false;
    }
  }
  rep.pass = pass;
  if (rep.exit_code == 0 && !pass) rep.exit_code = exit_codes::kCheckFailed;

  if (!cfg.output_dir.empty()) {
    fs::create_directories(cfg.output_dir);
    std::ofstream out(cfg.output_dir / "report.json");
    out << rep.to_json().dump(2) << '\n';
  }
  return rep;
}

json with_parameter(const json& config, const std::string& path, const json& value) {
  json out = config;
  json* node = &out;
  std::stringstream ss(path);
  std::string key;
  std::vector<std::string> keys;
  while (std::getline(ss, key, '.')) keys.push_back(key);
  if (keys.empty()) config_error("empty parameter path");
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (!node->is_object() || !node->contains(keys[i])) config_error("parameter '" + path + "' is not present in the config");
    node = &(*node)[keys[i]];
  }
  *node = value;
  return out;
}

unsigned worker_cap() {
  if (const char* env = std::getenv("LOWDIM_WORKERS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1U, std::thread::hardware_concurrency());
}

SweepResult sweep(const json& config, const std::string& path, const std::vector<json>& values, unsigned workers) {
  if (values.empty()) config_error("sweep needs at least one value");
  std::vector<ExperimentConfig> cfgs;
  const fs::path base = config.value("output_dir", std::string());
  for (const json& v : values) {
    json j = with_parameter(config, path, v);
    const std::string tag = path + "=" + (v.is_string() ? v.get<std::string>() : v.dump());
    j["id"] = config.at("id").get<std::string>() + "[" + tag + "]";
    if (!base.empty()) j["output_dir"] = (base / tag).string();
    cfgs.push_back(ExperimentConfig::parse(j));
  }
  SweepResult res;
  res.reports.resize(cfgs.size());
  if (workers == 0) workers = worker_cap();
  workers = std::min<unsigned>(workers, static_cast<unsigned>(cfgs.size()));
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < cfgs.size(); i = next++) res.reports[i] = run_experiment(cfgs[i]);
    });
  }
  for (auto& t : pool) t.join();

  std::ostringstream csv;
  csv << "parameter,value,check,measured,tolerance,pass\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    for (const auto& c : res.reports[i].checks)
      csv << path << ',' << (values[i].is_string() ? values[i].get<std::string>() : values[i].dump()) << ',' << c.name
          << ',' << csv_number(c.value) << ',' << csv_number(c.tolerance) << ',' << (c.pass ? 1 : 0) << '\n';
    res.exit_code = std::max(res.exit_code, res.reports[i].exit_code);
  }
  res.csv = csv.str();
  if (!base.empty()) {
    fs::create_directories(base);
    std::ofstream(base / "sweep.csv", std::ios::binary) << res.csv;
  }
  return res;
}

}  // namespace lowdim
