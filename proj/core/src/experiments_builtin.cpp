#include "lowdim/boundary_functionals.hpp"
#include "lowdim/elliptic_measure.hpp"
#include "lowdim/experiment.hpp"
#include "lowdim/model_oracle.hpp"
#include "lowdim/operator_fields.hpp"
#include "lowdim/regularized_distance.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace lowdim {

using nlohmann::json;

namespace {

Vec param_vec(const PipelineContext& ctx, const std::string& key, std::vector<double> fallback) {
  const auto v = ctx.param(key, fallback);
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= n;
  my /= n;
  double a = 0.0, b = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    a += (x[i] - mx) * (y[i] - my);
    b += (x[i] - mx) * (x[i] - mx);
  }
  return a / b;
}

std::size_t nearest_node(const Grid& g, const Vec& Y) {
  const Grid::Cell c = g.locate(Y);
  std::size_t best = 0;
  double bd = kInf;
  for (unsigned m = 0; m < (1U << g.dim()); ++m) {
    std::size_t node = 0;
    for (int k = 0; k < g.dim(); ++k)
      node += static_cast<std::size_t>(c.lower[static_cast<std::size_t>(k)] + static_cast<int>((m >> k) & 1U)) * g.stride(k);
    const double dist = (g.point(node) - Y).norm();
    if (dist < bd) bd = dist, best = node;
  }
  return best;
}

OperatorBuild operator_or_model(const PipelineContext& ctx, const BoundarySet& gamma) {
  if (!ctx.config().op.empty()) return make_operator(ctx.config().op, gamma, ctx.budget());
  return make_operator({{"kind", "model"}}, gamma, ctx.budget());
}

void require_plane(const BoundarySet& gamma, const char* what) {
  if (!gamma.is_plane()) throw Error(ErrorKind::Config, std::string(what) + " needs a flat boundary");
}

/// h_max and band_width follow h_min in the ratios of the configured grid.
GridOptions rescaled(GridOptions o, double h) {
  const double band = o.band_width > 0.0 ? o.band_width : 2.0 * o.h_min;
  o.h_max *= h / o.h_min;
  o.band_width = band * h / o.h_min;
  o.h_min = h;
  return o;
}

MeasureConfig measure_config(const PipelineContext& ctx, const BoundarySet& gamma, const OperatorBuild& op) {
  MeasureConfig mc;
  mc.grid = ctx.grid_options();
  mc.box = ctx.box();
  mc.assembly = op.assembly;
  mc.mollification = ctx.param("mollification", mc.mollification);
  const std::string shell = ctx.param<std::string>("shell", "zero");
  if (shell == "model") {
    require_plane(gamma, "the model shell");
    mc.shell = model_shell(gamma.param_dim());
  } else if (shell != "zero") {
    throw Error(ErrorKind::Config, "params.shell must be 'model' or 'zero'");
  }
  return mc;
}

// ---------------------------------------------------------------------------

void run_magic_residual(PipelineContext& ctx) {
  const BoundarySet gamma = ctx.boundary();
  const double alpha = ctx.param("alpha", gamma.n() - gamma.d() - 2.0);
  const int L0 = ctx.param("level", gamma.is_cantor() ? 6 : 10);
  const int levels = ctx.param("levels", 4);
  const int samples = ctx.param("samples", 100);
  const double tol0 = ctx.param("tolerance_schedule", 1e-3);
  if (levels < 1 || samples < 1) throw Error(ErrorKind::Config, "levels and samples must be positive");

  Box window;
  if (gamma.is_cantor()) {
    const double half = ctx.param("window", 2.0 * gamma.hull_radius());
    window = Box(gamma.hull_center().array() - half, gamma.hull_center().array() + half);
  } else {
    const double half = ctx.param("window", 40.0);
    window = Box::cube(gamma.param_dim(), -half, half);
  }
  const double max_delta = ctx.param("max_delta", gamma.is_cantor() ? 1.0 : 2.0);

  std::ostringstream csv;
  csv << "level,covering_radius,point,delta,alpha,residual\n";
  std::vector<Vec> pts;
  double excess = 0.0, finest_max = 0.0, finest_median = 0.0;
  int degenerate = 0;
  std::optional<QuadratureRule> finest;
  for (int L = L0; L < L0 + levels; ++L) {
    QuadratureRule rule = sigma_quadrature(gamma, L, window, ctx.budget().max_quadrature_nodes);
    if (pts.empty())
      pts = sample_points_off_gamma(gamma, rule, samples, ctx.param("min_delta_factor", 8.0) * rule.covering_radius,
                                    max_delta, ctx.seed());
    const double h = rule.covering_radius;
    RegularizedDistance rd(gamma, rule, alpha);
    std::vector<double> r;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      try {
        const double v = magic_residual(rd, pts[i]).residual;
        r.push_back(v);
        csv << L << ',' << csv_number(h) << ',' << i << ',' << csv_number(delta(gamma, pts[i])) << ','
            << csv_number(alpha) << ',' << csv_number(v) << '\n';
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::Degenerate) throw;
        ++degenerate;
      }
    }
    if (r.empty()) throw Error(ErrorKind::Degenerate, "no evaluable residual samples");
    const double mx = *std::max_element(r.begin(), r.end());
    const double tol = tol0 * std::ldexp(1.0, -(L - L0));
    excess = std::max(excess, mx / tol);
    finest_max = mx;
    finest_median = median(r);
    ctx.summary()["levels"].push_back({{"level", L}, {"covering_radius", h}, {"nodes", rule.size()},
                                       {"max_residual", mx}, {"median_residual", finest_median}});
    if (L == L0 + levels - 1) finest = std::move(rule);
  }
  if (degenerate) ctx.note(std::to_string(degenerate) + " samples skipped with a vanishing gradient");
  ctx.check("max_residual", finest_max);
  ctx.check("refinement_excess", excess);

  if (ctx.params().contains("nonmagic_alpha")) {
    const double a2 = ctx.param("nonmagic_alpha", 0.5);
    RegularizedDistance rd(gamma, *finest, a2);
    std::vector<double> r;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double v = magic_residual(rd, pts[i]).residual;
      r.push_back(v);
      csv << finest->level << ',' << csv_number(finest->covering_radius) << ',' << i << ','
          << csv_number(delta(gamma, pts[i])) << ',' << csv_number(a2) << ',' << csv_number(v) << '\n';
    }
    ctx.summary()["nonmagic_median"] = median(r);
    ctx.check("nonmagic_contrast", median(r) / std::max(finest_median, 1e-300));
  }
  ctx.write_csv("residuals.csv", csv.str());
}

void run_oracle_agreement(PipelineContext& ctx) {
  const BoundarySet gamma = ctx.boundary();
  require_plane(gamma, "oracle_agreement");
  if (gamma.param_dim() != 1) throw Error(ErrorKind::Config, "the oracle battery is one-dimensional");
  const OperatorBuild op = operator_or_model(ctx, gamma);
  const GridOptions base = ctx.grid_options();
  const auto hs = ctx.param("h_values", std::vector<double>{base.h_min});
  const auto battery = oracle_battery(ctx.param("battery_size", 20), ctx.param<std::uint64_t>("battery_seed", 7));
  const double oracle_tol = ctx.param("oracle_tolerance", 1e-9);
  const Box box = ctx.box();

  std::ostringstream csv;
  csv << "h_min,case,description,sup_error\n";
  std::vector<double> worst;
  for (double h : hs) {
    const DiscreteProblem P = build_and_assemble(op.field, box, gamma, rescaled(base, h), op.assembly);
    double w = 0.0;
    for (std::size_t c = 0; c < battery.size(); ++c) {
      const BoundaryData& g = battery[c];
      const auto data = dirichlet_data(
          *P.grid, [&](const Vec& foot) { return g(foot.head(1)); },
          [&](const Vec& X) { return model_oracle(g, X, oracle_tol); });
      const SolutionField u = solve_dirichlet(P, data);
      double err = 0.0;
      for (std::size_t i : P.interior_nodes)
        err = std::max(err, std::abs(u.value(i) - model_oracle(g, P.grid->point(i), oracle_tol)));
      err /= g.sup_norm;
      w = std::max(w, err);
      csv << csv_number(h) << ',' << c << ',' << g.description << ',' << csv_number(err) << '\n';
    }
    worst.push_back(w);
    ctx.summary()["sup_error"].push_back({{"h_min", h}, {"nodes", P.grid->size()}, {"error", w}});
  }
  ctx.write_csv("oracle_errors.csv", csv.str());
  ctx.check("sup_error", worst.back());
  if (worst.size() > 1) {
    double ratio = kInf;
    for (std::size_t i = 0; i + 1 < worst.size(); ++i) ratio = std::min(ratio, worst[i] / worst[i + 1]);
    ctx.check("convergence_ratio", ratio);
  }
}

void run_exact_measure(PipelineContext& ctx) {
  const BoundarySet gamma = ctx.boundary();
  require_plane(gamma, "exact_measure");
  const int d = gamma.param_dim(), n = gamma.n();
  const OperatorBuild op = operator_or_model(ctx, gamma);
  MeasureSolver solver(gamma, op.field, measure_config(ctx, gamma, op));

  Vec pole = Vec::Zero(n);
  pole[n - 1] = 1.0;
  pole = param_vec(ctx, "pole", std::vector<double>(pole.data(), pole.data() + n));
  const Vec center = gamma.lift(param_vec(ctx, "set_center", std::vector<double>(static_cast<std::size_t>(d), 0.0)));
  const SurfaceSet E = SurfaceSet::ball(center, ctx.param("set_radius", 1.0), "ball");
  const MeasureEstimate m = solver.omega(pole, E);
  const double exact = model_measure_exact(d, pole.head(d), pole.tail(n - d).norm(), E);

  std::ostringstream csv;
  csv << "pole,set,omega,raw_omega,exact,sigma\n";
  std::ostringstream pl;
  for (int k = 0; k < n; ++k) pl << (k ? " " : "") << csv_number(pole[k]);
  csv << pl.str() << ',' << E.id << ',' << csv_number(m.value) << ',' << csv_number(m.raw_value) << ','
      << csv_number(exact) << ',' << csv_number(m.sigma) << '\n';
  ctx.write_csv("measure.csv", csv.str());
  ctx.summary()["omega"] = m.value;
  ctx.summary()["exact"] = exact;
  ctx.summary()["nodes"] = solver.grid().size();
  if (solver.truncated_shell()) ctx.note("outer shell truncated to zero");
  ctx.check("abs_error", std::abs(m.value - exact));
}

void run_doubling_m(PipelineContext& ctx) {
  const BoundarySet gamma = ctx.boundary();
  const int n = gamma.n();
  const double d = gamma.d();
  const ScalarField w = weight_w(gamma, WeightMode::Euclidean);
  const int samples = ctx.param("samples", 100);
  const int resolution = ctx.param("resolution", 4);
  const double s_min = ctx.param("s_min", 0.05), s_max = ctx.param("s_max", 1.0);
  const double offset = ctx.param("offset_factor", 2.0);
  const double base_half = ctx.param("base_window", 1.0);

  std::vector<Vec> cantor_nodes;
  if (gamma.is_cantor()) {
    const double r = gamma.hull_radius();
    const QuadratureRule rule = sigma_quadrature(
        gamma, ctx.param("base_level", 8),
        Box(gamma.hull_center().array() - 2.0 * r, gamma.hull_center().array() + 2.0 * r));
    for (std::size_t i = 0; i < rule.size(); ++i) cantor_nodes.push_back(rule.node_vec(i));
  }

  std::mt19937_64 rng(ctx.seed());
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> gauss;
  std::ostringstream csv;
  csv << "sample,s,delta,m_s,m_2s,ratio\n";
  double C = 0.0, lo = kInf, hi = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double s = s_min * std::pow(s_max / s_min, u01(rng));
    Vec X;
    if (gamma.is_cantor()) {
      X = cantor_nodes[static_cast<std::size_t>(u01(rng) * static_cast<double>(cantor_nodes.size())) % cantor_nodes.size()];
    } else {
      Vec x(gamma.param_dim());
      for (int k = 0; k < x.size(); ++k) x[k] = base_half * (2.0 * u01(rng) - 1.0);
      X = gamma.lift(x);
    }
    Vec dir(n);
    for (int k = 0; k < n; ++k) dir[k] = gauss(rng);
    const double shift = u01(rng) < 0.5 ? 0.0 : offset * s * u01(rng);
    X += shift * dir.normalized();
    const double m1 = measure_m_ball(gamma, w, X, s, resolution).value;
    const double m2 = measure_m_ball(gamma, w, X, 2.0 * s, resolution).value;
    const double ratio = m2 / m1;
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
    C = std::max({C, ratio / std::pow(2.0, n), std::pow(2.0, d + 1.0) / ratio});
    csv << i << ',' << csv_number(s) << ',' << csv_number(delta(gamma, X)) << ',' << csv_number(m1) << ','
        << csv_number(m2) << ',' << csv_number(ratio) << '\n';
  }
  ctx.write_csv("doubling.csv", csv.str());
  ctx.summary()["ratio_min"] = lo;
  ctx.summary()["ratio_max"] = hi;
  ctx.check("doubling_constant", C);
}

void run_green_exponents(PipelineContext& ctx) {
  const BoundarySet gamma = ctx.boundary();
  require_plane(gamma, "green_exponents");
  const int d = gamma.param_dim(), n = gamma.n();
  const OperatorBuild op = operator_or_model(ctx, gamma);
  const GridOptions base = ctx.grid_options();
  const double h = base.h_min;

  // Near field: G(X, Y) ~ |X - Y|^{2-n} for |X - Y| << delta(Y).
  {
    const DiscreteProblem P = build_and_assemble(op.field, ctx.box(), gamma, base, op.assembly);
    Vec target = Vec::Zero(n);
    target[d] = ctx.param("near_pole_height", 1.0);
    const std::size_t y = nearest_node(*P.grid, target);
    const Vec Y = P.grid->point(y);
    const SolutionField G = green_function(P, y);
    Vec dir = Vec::Zero(n);
    dir[0] = 0.6;
    dir[n - 1] = 0.8;
    dir = param_vec(ctx, "near_direction", std::vector<double>(dir.data(), dir.data() + n)).normalized();
    std::vector<double> lx, ly;
    std::ostringstream csv;
    csv << "regime,distance,green\n";
    for (double r = 2.0 * h; r <= ctx.param("near_max_distance", 0.5) * (1 + 1e-9); r *= 1.2) {
      const double g = G.at(Y + r * dir);
      lx.push_back(std::log(r));
      ly.push_back(std::log(g));
      csv << "near," << csv_number(r) << ',' << csv_number(g) << '\n';
    }
    const double slope = ls_slope(lx, ly);
    ctx.summary()["near_slope"] = slope;
    ctx.summary()["near_nodes"] = P.grid->size();
    ctx.write_csv("green_near.csv", csv.str());
    ctx.check("near_exponent_error", std::abs(slope - (2.0 - n)));
  }

  // Far field: G(X, Y) ~ |X - Y|^{1-d} for |X - Y| comparable to delta(X), delta(Y); X the mirror of Y.
  {
    const double L = ctx.param("far_half_width", 64.0);
    GridOptions o = base;
    o.h_max = ctx.param("far_h_max", 16.0);
    o.grading_ratio = ctx.param("far_grading_ratio", 1.3);
    const Box box = Box::cube(n, -L, L);
    Vec flo = box.lo, fhi = box.hi;
    flo.head(d).setConstant(-h);
    fhi.head(d).setConstant(h);
    o.focus = Box(flo, fhi);
    const DiscreteProblem P = build_and_assemble(op.field, box, gamma, o, op.assembly);
    std::vector<double> lx, ly;
    std::ostringstream csv;
    csv << "regime,distance,green\n";
    for (double lam : ctx.param("far_heights", std::vector<double>{0.5, 1.0, 2.0, 4.0})) {
      Vec target = Vec::Zero(n);
      target[d] = lam;
      const std::size_t y = nearest_node(*P.grid, target);
      const Vec Y = P.grid->point(y);
      const SolutionField G = green_function(P, y);
      Vec X = Y;
      X.tail(n - d) *= -1.0;
      const double dist = (X - Y).norm();
      const double g = G.at(X);
      lx.push_back(std::log(dist));
      ly.push_back(std::log(g));
      csv << "far," << csv_number(dist) << ',' << csv_number(g) << '\n';
    }
    const double slope = ls_slope(lx, ly);
    ctx.summary()["far_slope"] = slope;
    ctx.summary()["far_nodes"] = P.grid->size();
    ctx.write_csv("green_far.csv", csv.str());
    ctx.check("far_exponent_error", std::abs(slope - (1.0 - d)));
  }
}

void run_max_principle(PipelineContext& ctx) {
  const BoundarySet gamma = ctx.boundary();
  const OperatorBuild op = operator_or_model(ctx, gamma);
  const DiscreteProblem P = build_and_assemble(op.field, ctx.box(), gamma, ctx.grid_options(), op.assembly);
  SolverOptions so;
  so.method = ctx.param<std::string>("solver", "direct") == "direct" ? SolverMethod::Direct : SolverMethod::Auto;
  so.max_principle_tolerance = kInf;
  std::mt19937_64 rng(ctx.seed());
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::ostringstream csv;
  csv << "sample,min,max,violation\n";
  double worst = 0.0;
  const int samples = ctx.param("samples", 50);
  for (int s = 0; s < samples; ++s) {
    std::vector<double> data(P.grid->size(), 0.0);
    for (std::size_t j : P.boundary_nodes) data[j] = u01(rng);
    const SolutionField u = solve_dirichlet(P, data, so);
    const auto [mn, mx] = std::minmax_element(u.values().begin(), u.values().end());
    const double v = std::max({0.0, -*mn, *mx - 1.0});
    worst = std::max(worst, v);
    csv << s << ',' << csv_number(*mn) << ',' << csv_number(*mx) << ',' << csv_number(v) << '\n';
  }
  ctx.write_csv("max_principle.csv", csv.str());
  ctx.summary()["nodes"] = P.grid->size();
  ctx.summary()["scalar_operator"] = op.field.is_scalar();
  ctx.check("max_violation", worst);
}

void run_carleson_scaling(PipelineContext& ctx) {
  const int n = ctx.config().boundary.value("n", 3);
  const int d = 1;
  const double freq = ctx.param("frequency", 1.0);
  std::vector<double> eps;
  if (ctx.params().contains("eps") && ctx.params().at("eps").is_number())
    eps.push_back(ctx.params().at("eps").get<double>());
  else
    eps = ctx.param("eps", std::vector<double>{0.1, 0.05, 0.025});
  std::vector<CarlesonBall> balls;
  const double radius = ctx.param("radius", 1.0);
  for (double c : ctx.param("centers", std::vector<double>{0.0, 0.7, 1.9})) balls.push_back({Vec::Constant(1, c), radius});

  static const char* names[] = {"grad_b3", "c3", "c4", "grad_b"};
  std::vector<std::array<double, 4>> norms;
  std::ostringstream csv;
  csv << "eps,component,norm\n";
  double max_norm = 0.0;
  for (double e : eps) {
    const GraphFunction phi = sine_graph(d, n - d, e / freq, freq);
    const BoundarySet gamma = BoundarySet::graph(phi, n);
    const ScalarField w = weight_w(gamma, WeightMode::Euclidean);
    MatrixField A;
    A.n = n;
    A.scalar = w.value;
    A.weight = w.value;
    const MatrixField Ar = conjugate(A, cov_rho_full(phi, n));
    const StructureReport rep = structure_decompose([&](const Vec& X) { return Ar.reduced(X); }, d, n, balls);
    const std::array<double, 4> v{rep.grad_b3.supremum, rep.c3.supremum, rep.c4.supremum, rep.grad_b.supremum};
    for (int k = 0; k < 4; ++k) {
      csv << csv_number(e) << ',' << names[k] << ',' << csv_number(v[static_cast<std::size_t>(k)]) << '\n';
      max_norm = std::max(max_norm, v[static_cast<std::size_t>(k)]);
    }
    ctx.summary()["b_range"].push_back({rep.b_min, rep.b_max});
    norms.push_back(v);
  }
  ctx.write_csv("carleson_norms.csv", csv.str());
  ctx.check("max_norm", max_norm);
  if (norms.size() < 2) return;
  double lo = kInf, hi = 0.0;
  for (std::size_t i = 0; i + 1 < norms.size(); ++i) {
    for (std::size_t k = 0; k < 4; ++k) {
      if (norms[i + 1][k] == 0.0) {
        ctx.note(std::string("component ") + names[k] + " vanishes; ratio skipped");
        continue;
      }
      // ratio per halving of eps
      const double r = std::pow(norms[i][k] / norms[i + 1][k], std::log(2.0) / std::log(eps[i] / eps[i + 1]));
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
  }
  ctx.summary()["ratio_min"] = lo;
  ctx.summary()["ratio_max"] = hi;
  ctx.check("min_ratio", lo);
  ctx.check("max_ratio", hi);
}

void run_ainfty_probe(PipelineContext& ctx) {
  const BoundarySet gamma = ctx.boundary();
  const OperatorBuild op = operator_or_model(ctx, gamma);
  MeasureSolver solver(gamma, op.field, measure_config(ctx, gamma, op));
  std::vector<ProbeBall> balls;
  const double radius = ctx.param("radius", 1.0);
  for (double c : ctx.param("centers", std::vector<double>{-0.5, 0.0, 0.5})) {
    Vec x = Vec::Zero(gamma.param_dim());
    x[0] = c;
    balls.push_back({gamma.lift(x), radius});
  }
  const auto thresholds = ctx.param("thresholds", std::vector<double>{0.001, 0.003, 0.01, 0.03, 0.1, 0.3});
  const AinftyReport rep = ainfty_probe(solver, balls, ctx.param("sets_per_ball", 300), thresholds, ctx.seed());

  std::ostringstream pts, env;
  pts << "ball,set,omega,fraction\n";
  for (const auto& p : rep.points)
    pts << p.ball << ',' << p.set_id << ',' << csv_number(p.omega) << ',' << csv_number(p.fraction) << '\n';
  env << "delta,epsilon\n";
  double defect = 0.0;
  for (std::size_t i = 0; i < rep.thresholds.size(); ++i) {
    env << csv_number(rep.thresholds[i]) << ',' << csv_number(rep.envelope[i]) << '\n';
    if (i) defect = std::max(defect, rep.envelope[i - 1] - rep.envelope[i]);
  }
  ctx.write_csv("ainfty_points.csv", pts.str());
  ctx.write_csv("ainfty_envelope.csv", env.str());
  ctx.summary()["sets"] = rep.points.size();
  ctx.summary()["skipped"] = rep.skipped;
  ctx.summary()["nodes"] = solver.grid().size();
  if (solver.truncated_shell()) ctx.note("outer shell truncated to zero");
  const double at = rep.at(ctx.param("delta", 0.01));
  ctx.check("monotonicity_defect", defect);
  ctx.check("envelope_at_delta", at);
  ctx.check("envelope_exceeds", at);
}

void run_comparability(PipelineContext& ctx) {
  const BoundarySet gamma = ctx.boundary();
  const OperatorBuild op = operator_or_model(ctx, gamma);
  const double alpha = ctx.config().op.value("alpha", gamma.n() - gamma.d() - 2.0);
  const MeasureConfig base = measure_config(ctx, gamma, op);
  const auto hs = ctx.param("h_values", std::vector<double>{base.grid.h_min});
  const int n = gamma.n();
  Vec pole = Vec::Zero(n);
  pole[n - 1] = 1.0;
  pole = param_vec(ctx, "pole", std::vector<double>(pole.data(), pole.data() + n));
  const ProbeBall ball{gamma.is_cantor() ? gamma.cantor_anchor() : gamma.lift(Vec::Zero(gamma.param_dim())),
                       ctx.param("probe_radius", 0.75)};

  std::vector<SurfaceSet> sets;
  std::vector<double> constants;
  std::ostringstream csv;
  csv << "h_min,set,sigma,omega,lower,upper\n";
  for (double h : hs) {
    MeasureConfig mc = base;
    mc.grid = rescaled(base.grid, h);
    MeasureSolver solver(gamma, op.field, mc);
    if (sets.empty()) {
      std::mt19937_64 rng(ctx.seed());
      sets = random_subsets(solver, ball, ctx.param("sets", 30), rng);
    }
    const ComparabilityReport rep = comparability_check(solver, alpha, pole, sets);
    for (std::size_t i = 0; i < sets.size(); ++i)
      csv << csv_number(h) << ',' << sets[i].id << ',' << csv_number(solver.sigma(sets[i])) << ','
          << csv_number(solver.omega(pole, sets[i]).value) << ',' << csv_number(rep.lower[i]) << ','
          << csv_number(rep.upper[i]) << '\n';
    constants.push_back(rep.constant);
    ctx.summary()["constants"].push_back({{"h_min", h}, {"constant", rep.constant}, {"nodes", solver.grid().size()}});
  }
  ctx.write_csv("comparability.csv", csv.str());
  ctx.check("constant", *std::max_element(constants.begin(), constants.end()));
  if (constants.size() > 1) {
    double drift = 1.0;
    for (std::size_t i = 0; i + 1 < constants.size(); ++i)
      drift = std::max({drift, constants[i] / constants[i + 1], constants[i + 1] / constants[i]});
    ctx.check("drift", drift);
  }
}

/// Solution of the flat model problem with one battery datum as trace.
SolutionField battery_solution(const PipelineContext& ctx, const BoundarySet& gamma, DiscreteProblem& P) {
  const OperatorBuild op = operator_or_model(ctx, gamma);
  P = build_and_assemble(op.field, ctx.box(), gamma, ctx.grid_options(), op.assembly);
  const auto battery = oracle_battery(ctx.param("battery_size", 20), ctx.param<std::uint64_t>("battery_seed", 7));
  const BoundaryData& g = battery.at(static_cast<std::size_t>(ctx.param("battery_case", 3)) % battery.size());
  const auto data = dirichlet_data(*P.grid, [&](const Vec& f) { return g(f.head(1)); },
                                   [&](const Vec& X) { return model_oracle(g, X, 1e-9); });
  return solve_dirichlet(P, data);
}

SolutionField scaled(const SolutionField& u, double lambda) {
  std::vector<double> v = u.values();
  for (double& x : v) x *= lambda;
  return SolutionField(u.grid_ptr(), std::move(v));
}

void run_functional_identities(PipelineContext& ctx) {
  const BoundarySet gamma = ctx.boundary();
  require_plane(gamma, "functional_identities");
  DiscreteProblem P;
  const SolutionField u = battery_solution(ctx, gamma, P);
  const int d = gamma.param_dim();
  const Vec c0 = Vec::Zero(d);
  const double r = ctx.param("lattice_radius", 1.0);
  const BoundaryPoints xs = boundary_lattice(c0, r, ctx.param("lattice_spacing", 0.1));
  const double ell = ctx.param("ell", 0.75);
  const Cutoff chi = Cutoff::local(ell, c0, r, random_sawtooth(c0, r, 5, 0.5, ctx.seed()));
  const std::vector<std::pair<Cutoff, Cutoff>> pairs{{chi, chi.doubled()}, {chi, Cutoff::everywhere()}};
  const auto ps = ctx.param("p_values", std::vector<double>{1.5, 2.0, 3.0});
  const auto lambdas = ctx.param("lambdas", std::vector<double>{2.0, 0.5, -1.0, 4.0, 0.25});

  const CellTable cells(u);
  std::ostringstream csv;
  csv << "functional,p,lambda,max_defect\n";
  double hom = 0.0, mono = 0.0;
  const ConeFunctional N1 = nontangential_max(u, xs, chi);
  for (double lam : lambdas) {
    const SolutionField v = scaled(u, lam);
    const ConeFunctional N2 = nontangential_max(v, xs, chi);
    double defect = 0.0;
    for (std::size_t i = 0; i < xs.points.size(); ++i)
      defect = std::max(defect, std::abs(N2.values[i] - std::abs(lam) * N1.values[i]));
    csv << "N,0," << csv_number(lam) << ',' << csv_number(defect) << '\n';
    hom = std::max(hom, defect);
    const CellTable vc(v);
    for (double p : ps) {
      const ConeFunctional S1 = square_function(cells, p, xs, chi);
      const ConeFunctional S2 = square_function(vc, p, xs, chi);
      double ds = 0.0;
      for (std::size_t i = 0; i < xs.points.size(); ++i)
        ds = std::max(ds, std::abs(S2.values[i] - std::abs(lam) * S1.values[i]));
      csv << "S," << csv_number(p) << ',' << csv_number(lam) << ',' << csv_number(ds) << '\n';
      hom = std::max(hom, ds);
    }
  }
  for (const auto& [small, large] : pairs) {
    const ConeFunctional Na = nontangential_max(u, xs, small), Nb = nontangential_max(u, xs, large);
    for (std::size_t i = 0; i < xs.points.size(); ++i) mono = std::max(mono, Na.values[i] - Nb.values[i]);
    for (double p : ps) {
      const ConeFunctional Sa = square_function(cells, p, xs, small), Sb = square_function(cells, p, xs, large);
      for (std::size_t i = 0; i < xs.points.size(); ++i) mono = std::max(mono, Sa.values[i] - Sb.values[i]);
    }
  }
  csv << "monotonicity,0,1," << csv_number(mono) << '\n';
  ctx.write_csv("functional_identities.csv", csv.str());
  std::ostringstream sf;
  write_functional_csv(square_function(cells, 2.0, xs, chi), sf);
  ctx.write_csv("square_function.csv", sf.str());
  ctx.check("homogeneity_defect", hom);
  ctx.check("monotonicity_defect", mono);
}

void run_functional_inequalities(PipelineContext& ctx) {
  const BoundarySet gamma = ctx.boundary();
  require_plane(gamma, "functional_inequalities");
  const int d = gamma.param_dim(), n = gamma.n();
  DiscreteProblem P;
  const SolutionField u = battery_solution(ctx, gamma, P);
  const CellTable cells(u);
  const double p = ctx.param("p", 2.0);
  const Vec c0 = Vec::Zero(d);
  std::vector<CheckRecord> records;

  const double rP = ctx.param("poincare_radius", 1.0);
  const auto bank = poincare_bank(P.grid, rP, ctx.param("bank_size", 8), ctx.seed());
  const RatioSummary poin = poincare_check(bank, c0, rP);
  records.insert(records.end(), poin.records.begin(), poin.records.end());
  ctx.check("poincare_ratio", poin.max_ratio);

  Vec bc = Vec::Zero(n);
  bc[n - 1] = ctx.param("caccioppoli_height", 0.8);
  const double br = ctx.param("caccioppoli_radius", 0.25);
  const RatioSummary cacc = caccioppoli_check(cells, p, {{bc, br}, {bc + 0.5 * Vec::Unit(n, 0), br}});
  records.insert(records.end(), cacc.records.begin(), cacc.records.end());
  ctx.check("caccioppoli_ratio", cacc.max_ratio);

  const OperatorBuild op = operator_or_model(ctx, gamma);
  const std::vector<Cutoff> cutoffs{Cutoff::local(0.75, c0, 1.0), Cutoff::local(0.5, c0, 0.75, random_sawtooth(c0, 0.75, 4, 0.5, ctx.seed()))};
  double pmin = kInf;
  for (double q : ctx.param("p_values", std::vector<double>{1.5, 2.0, 3.0})) {
    const RatioSummary pe = p_ellipticity_check(op.field, bank, cutoffs, q);
    records.insert(records.end(), pe.records.begin(), pe.records.end());
    pmin = std::min(pmin, pe.min_ratio);
  }
  ctx.check("p_ellipticity_min", pmin);

  const NSBounds ns = ns_bounds_check(cells, p, p, ctx.param("ns_ell", 0.5), c0, ctx.param("ns_radius", 0.5), {},
                                      ctx.param("lattice_spacing", 0.1));
  records.push_back({"ns_s_over_n", ns.s1, ns.n2, ns.s_over_n});
  records.push_back({"ns_n_over_s", ns.n1, ns.s2 + ns.anchor, ns.n_over_s});
  ctx.check("ns_ratio", std::max(ns.s_over_n, ns.n_over_s));

  const double carl = carleson_energy(cells, c0, ctx.param("carleson_radius", 0.5));
  records.push_back({"carleson_energy", carl, 1.0, carl});
  ctx.check("carleson_energy", carl);

  std::ostringstream csv;
  write_check_csv(records, ctx.config().hash(), csv);
  ctx.write_csv("inequalities.csv", csv.str());
}

// ---------------------------------------------------------------------------
// Default configurations

json grid_block(std::vector<double> lo, std::vector<double> hi, double h_min, double h_max, double band) {
  return {{"h_min", h_min}, {"h_max", h_max}, {"band_width", band}, {"grading_ratio", 1.5},
          {"box", {{"lo", lo}, {"hi", hi}}}};
}

json base_config(const std::string& id, const std::string& pipeline, std::uint64_t seed) {
  return {{"id", id}, {"pipeline", pipeline}, {"seed", seed}, {"budget", {{"max_nodes", 3000000}}}};
}

json sine_boundary(int n, double amplitude) {
  return {{"kind", "graph"}, {"n", n}, {"phi", {{"type", "sine"}, {"amplitude", amplitude}, {"frequency", 1.0}}}};
}

std::vector<ExperimentInfo> build_catalog() {
  using C = Comparison;
  std::vector<ExperimentInfo> cat;

  const std::vector<DeclaredCheck> magic_checks{
      {"max_residual", C::LessEqual, 1e-3, "max relative residual R(X) at the finest quadrature level"},
      {"refinement_excess", C::LessEqual, 1.0,
       "max over levels of max R / (tolerance halved per level); <= 1 means R meets the halving schedule"},
      {"nonmagic_contrast", C::GreaterEqual, 10.0, "median R for the non-magic alpha over the magic median"}};

  cat.push_back({"magic_residual",
                 "Residual of L_alpha D_alpha = 0 on a sine graph in R^4 with alpha = 1",
                 "D_alpha is an exact L_alpha solution when n = d + 2 + alpha",
                 "magic_residual", magic_checks, run_magic_residual, [] {
                   json j = base_config("magic_residual", "magic_residual", 3);
                   j["boundary"] = sine_boundary(4, 0.05);
                   j["params"] = {{"alpha", 1.0}, {"level", 10}, {"levels", 4}, {"window", 40.0},
                                  {"samples", 100}, {"max_delta", 2.0}, {"nonmagic_alpha", 0.5}};
                   return j;
                 }});
  cat.push_back({"cantor_magic",
                 "Magic residual battery on the middle-thirds Cantor set in R^3",
                 "D_alpha is an exact L_alpha solution when n = d + 2 + alpha, fractal d",
                 "magic_residual", magic_checks, run_magic_residual, [] {
                   json j = base_config("cantor_magic", "magic_residual", 3);
                   j["boundary"] = {{"kind", "cantor"}, {"n", 3}, {"preset", "middle_thirds"}};
                   j["params"] = {{"alpha", 1.0 - std::log(2.0) / std::log(3.0)}, {"level", 6}, {"levels", 4},
                                  {"samples", 100}, {"max_delta", 1.0}};
                   j["checks"] = {"max_residual", "refinement_excess"};
                   return j;
                 }});
  cat.push_back({"oracle_agreement",
                 "Model operator solves against the half-plane Poisson oracle, d = 1, n = 3",
                 "radial reduction of L_0 to the half-plane Laplacian",
                 "oracle_agreement",
                 {{"sup_error", C::LessEqual, 0.02, "worst normalized sup-norm error at the finest h_min"},
                  {"convergence_ratio", C::GreaterEqual, 1.7, "error ratio between successive h_min halvings"}},
                 run_oracle_agreement, [] {
                   json j = base_config("oracle_agreement", "oracle_agreement", 7);
                   j["boundary"] = {{"kind", "plane"}, {"d", 1}, {"n", 3}};
                   j["operator"] = {{"kind", "model"}};
                   j["grid"] = grid_block({-2, -1.5, -1.5}, {2, 1.5, 1.5}, 1.0 / 64, 8.0 / 64, 0.5 / 64);
                   j["params"] = {{"h_values", {1.0 / 32, 1.0 / 64}}, {"battery_size", 20}, {"battery_seed", 7}};
                   return j;
                 }});
  cat.push_back({"exact_measure",
                 "Elliptic measure of [-1, 1] from the pole (0, (0, 1)) for L_0, exact value 1/2",
                 "half-plane Poisson measure: (2/pi) arctan 1 = 1/2",
                 "exact_measure",
                 {{"abs_error", C::LessEqual, 0.02, "|omega - exact|"}},
                 run_exact_measure, [] {
                   json j = base_config("exact_measure", "exact_measure", 1);
                   j["boundary"] = {{"kind", "plane"}, {"d", 1}, {"n", 3}};
                   j["operator"] = {{"kind", "model"}};
                   j["grid"] = grid_block({-3, -2.5, -2.5}, {3, 2.5, 2.5}, 1.0 / 32, 8.0 / 32, 0.5 / 32);
                   j["params"] = {{"pole", {0, 0, 1}}, {"set_center", {0}}, {"set_radius", 1.0}, {"shell", "model"}};
                   return j;
                 }});
  cat.push_back({"doubling_m",
                 "Doubling of the weighted measure m over random balls near a sine graph",
                 "m(B(X, 2s)) / m(B(X, s)) lies in [2^{d+1}/C, C 2^n]",
                 "doubling_m",
                 {{"doubling_constant", C::LessEqual, 10.0, "smallest C bracketing all ratios"}},
                 run_doubling_m, [] {
                   json j = base_config("doubling_m", "doubling_m", 5);
                   j["boundary"] = sine_boundary(3, 0.05);
                   j["params"] = {{"samples", 100}, {"resolution", 4}, {"s_min", 0.05}, {"s_max", 1.0}};
                   return j;
                 }});
  cat.push_back({"green_exponents",
                 "Near- and far-field power laws of the discrete Green function for L_0, d = 1, n = 3",
                 "g(X, Y) ~ |X - Y|^{2-n} near the pole and ~ |X - Y|^{1-d} at boundary scale",
                 "green_exponents",
                 {{"near_exponent_error", C::LessEqual, 0.3, "|fitted slope - (2 - n)|"},
                  {"far_exponent_error", C::LessEqual, 0.3, "|fitted slope - (1 - d)|"}},
                 run_green_exponents, [] {
                   json j = base_config("green_exponents", "green_exponents", 1);
                   j["boundary"] = {{"kind", "plane"}, {"d", 1}, {"n", 3}};
                   j["operator"] = {{"kind", "model"}};
                   j["grid"] = grid_block({-2, -2.5, -2.5}, {2, 2.5, 2.5}, 1.0 / 16, 1.0 / 16, 0.5 / 16);
                   j["params"] = {{"near_max_distance", 0.5}, {"far_half_width", 64.0}, {"far_h_max", 16.0},
                                  {"far_grading_ratio", 1.3}, {"far_heights", {0.5, 1.0, 2.0, 4.0}}};
                   return j;
                 }});
  cat.push_back({"max_principle",
                 "Random boundary data in [0, 1] keep the discrete solution in [0, 1]",
                 "maximum principle for L-solutions",
                 "max_principle",
                 {{"max_violation", C::LessEqual, 1e-9, "max over samples of max(-min u, max u - 1)"}},
                 run_max_principle, [] {
                   json j = base_config("max_principle", "max_principle", 17);
                   j["boundary"] = {{"kind", "plane"}, {"d", 1}, {"n", 3}};
                   j["operator"] = {{"kind", "model"}};
                   j["grid"] = grid_block({-1, -1, -1}, {1, 1, 1}, 1.0 / 8, 0.25, 0.5 / 8);
                   j["params"] = {{"samples", 50}, {"solver", "direct"}};
                   return j;
                 }});
  cat.push_back({"carleson_scaling",
                 "Carleson norms of the flattened coefficients scale like eps^2 in the Lipschitz constant",
                 "small Lipschitz constant gives Carleson-small perturbations of the model structure",
                 "carleson_scaling",
                 {{"min_ratio", C::GreaterEqual, 2.5, "smallest successive norm ratio per halving of eps"},
                  {"max_ratio", C::LessEqual, 6.0, "largest successive norm ratio per halving of eps"},
                  {"max_norm", C::LessEqual, 1.0, "largest Carleson norm over eps and components"}},
                 run_carleson_scaling, [] {
                   json j = base_config("carleson_scaling", "carleson_scaling", 1);
                   j["boundary"] = sine_boundary(3, 0.1);
                   j["params"] = {{"eps", {0.1, 0.05, 0.025}}, {"centers", {0.0, 0.7, 1.9}}, {"radius", 1.0}};
                   return j;
                 }});
  cat.push_back({"ainfty_probe",
                 "Empirical A_infinity envelope of L_alpha measure on a sine graph with Lipschitz constant 0.05",
                 "omega(E) < delta omega(B) at the corkscrew pole implies sigma(E) < eps sigma(B)",
                 "ainfty_probe",
                 {{"monotonicity_defect", C::LessEqual, 0.0, "largest decrease of eps(delta) in delta"},
                  {"envelope_at_delta", C::LessEqual, 0.2, "eps(delta) at params.delta"},
                  {"envelope_exceeds", C::GreaterEqual, 0.2, "eps(delta) at params.delta, for counterexamples"}},
                 run_ainfty_probe, [] {
                   json j = base_config("ainfty_probe", "ainfty_probe", 11);
                   j["boundary"] = sine_boundary(3, 0.05);
                   j["operator"] = {{"kind", "l_alpha"}, {"alpha", 1.0}, {"level", 12}, {"window", 12.0}};
                   j["grid"] = grid_block({-4, -4, -4}, {4, 4, 4}, 1.0 / 32, 0.5, 0.5 / 32);
                   j["params"] = {{"centers", {-0.5, 0.0, 0.5}}, {"radius", 1.0}, {"sets_per_ball", 300},
                                  {"delta", 0.01}, {"shell", "zero"}};
                   j["checks"] = {"monotonicity_defect", "envelope_at_delta"};
                   return j;
                 }});
  cat.push_back({"ainfty_counterexample",
                 "The same probe for a singular radial-stretch lift on the plane, expected to break the bound",
                 "lifted operators with singular measure fail the A_infinity implication",
                 "ainfty_probe",
                 {{"monotonicity_defect", C::LessEqual, 0.0, "largest decrease of eps(delta) in delta"},
                  {"envelope_at_delta", C::LessEqual, 0.2, "eps(delta) at params.delta"},
                  {"envelope_exceeds", C::GreaterEqual, 0.2, "eps(delta) at params.delta, for counterexamples"}},
                 run_ainfty_probe, [] {
                   json j = base_config("ainfty_counterexample", "ainfty_probe", 11);
                   j["boundary"] = {{"kind", "plane"}, {"d", 1}, {"n", 3}};
                   j["operator"] = {{"kind", "stretch_lift"}, {"stretch", 8.0}};
                   j["grid"] = grid_block({-4, -4, -4}, {4, 4, 4}, 1.0 / 32, 0.5, 0.5 / 32);
                   j["params"] = {{"centers", {-0.5, 0.0, 0.5}}, {"radius", 1.0}, {"sets_per_ball", 300},
                                  {"delta", 0.01}, {"shell", "zero"}};
                   j["checks"] = {"monotonicity_defect", "envelope_exceeds"};
                   return j;
                 }});
  cat.push_back({"comparability_54",
                 "Two-sided comparability of sigma(A) and R^d omega(A) for L_alpha, flat R^1 in R^4",
                 "C^{-1} sigma(A) <= R^d omega^X(A) <= C sigma(A) in the magic case",
                 "comparability_54",
                 {{"constant", C::LessEqual, 10.0, "largest two-sided constant over sets and resolutions"},
                  {"drift", C::LessEqual, 2.0, "largest ratio between constants of successive resolutions"}},
                 run_comparability, [] {
                   json j = base_config("comparability_54", "comparability_54", 5);
                   j["boundary"] = {{"kind", "plane"}, {"d", 1}, {"n", 4}};
                   j["operator"] = {{"kind", "l_alpha"}, {"alpha", 1.0}, {"level", 11}, {"window", 8.0}};
                   j["grid"] = grid_block({-2, -1.5, -1.5, -1.5}, {2, 1.5, 1.5, 1.5}, 1.0 / 8, 1.0, 0.5 / 8);
                   j["params"] = {{"h_values", {1.0 / 8, 1.0 / 16}}, {"sets", 30}, {"probe_radius", 0.75},
                                  {"pole", {0, 0, 0, 1}}, {"shell", "model"}};
                   return j;
                 }});
  cat.push_back({"functional_identities",
                 "Homogeneity of N and S_p under u -> lambda u and monotonicity in the cutoff",
                 "N and S_p are positively homogeneous and monotone in the truncation",
                 "functional_identities",
                 {{"homogeneity_defect", C::LessEqual, 0.0, "max |F(lambda u) - |lambda| F(u)|"},
                  {"monotonicity_defect", C::LessEqual, 0.0, "max F(u | chi_1) - F(u | chi_2) for chi_1 <= chi_2"}},
                 run_functional_identities, [] {
                   json j = base_config("functional_identities", "functional_identities", 2);
                   j["boundary"] = {{"kind", "plane"}, {"d", 1}, {"n", 3}};
                   j["operator"] = {{"kind", "model"}};
                   j["grid"] = grid_block({-2, -1.5, -1.5}, {2, 1.5, 1.5}, 1.0 / 16, 0.25, 0.5 / 16);
                   j["params"] = {{"battery_case", 3}, {"p_values", {1.5, 2.0, 3.0}},
                                  {"lambdas", {2.0, 0.5, -1.0, 4.0, 0.25}}, {"lattice_spacing", 0.1}};
                   return j;
                 }});
  cat.push_back({"functional_inequalities",
                 "Poincare, Caccioppoli, p-ellipticity, N/S and Carleson energy ratios for a model solution",
                 "weighted Poincare and Caccioppoli inequalities, p-ellipticity and N ~ S comparability",
                 "functional_inequalities",
                 {{"poincare_ratio", C::LessEqual, 1.0, "max int |u|^2 dm / (r^2 int |grad u|^2 dm)"},
                  {"caccioppoli_ratio", C::LessEqual, 10.0, "max int_B |grad u|^2 |u|^{p-2} dm / (r^{-2} int_2B |u|^p dm)"},
                  {"p_ellipticity_min", C::GreaterEqual, 0.1, "min ratio of the p-ellipticity form to its lower bound"},
                  {"ns_ratio", C::LessEqual, 10.0, "max of the two N/S truncation ratios"},
                  {"carleson_energy", C::LessEqual, 10.0, "normalized Carleson energy of the solution"}},
                 run_functional_inequalities, [] {
                   json j = base_config("functional_inequalities", "functional_inequalities", 4);
                   j["boundary"] = {{"kind", "plane"}, {"d", 1}, {"n", 3}};
                   j["operator"] = {{"kind", "model"}};
                   j["grid"] = grid_block({-2, -1.5, -1.5}, {2, 1.5, 1.5}, 1.0 / 16, 0.25, 0.5 / 16);
                   j["params"] = {{"battery_case", 3}, {"p", 2.0}, {"bank_size", 8}};
                   return j;
                 }});
  return cat;
}

}  // namespace

const std::vector<ExperimentInfo>& experiment_catalog() {
  static const std::vector<ExperimentInfo> cat = build_catalog();
  return cat;
}

const ExperimentInfo& find_pipeline(const std::string& pipeline) {
  for (const auto& e : experiment_catalog())
    if (e.pipeline == pipeline || e.id == pipeline) return e;
  throw Error(ErrorKind::Config, "unknown pipeline '" + pipeline + "'");
}

}  // namespace lowdim
