#include "lowdim/elliptic_measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace lowdim {

SurfaceSet SurfaceSet::ball(const Vec& center, double radius, std::string id) {
  SurfaceSet s;
  s.centers.push_back(center);
  s.radii.push_back(radius);
  s.id = std::move(id);
  return s;
}

SurfaceSet SurfaceSet::everything(std::string id) {
  SurfaceSet s;
  s.complement = true;
  s.id = std::move(id);
  return s;
}

bool SurfaceSet::contains(const Vec& y) const {
  bool in = false;
  for (std::size_t k = 0; k < centers.size() && !in; ++k) in = (y - centers[k]).norm() <= radii[k];
  return in != complement;
}

std::vector<std::pair<double, double>> SurfaceSet::intervals() const {
  std::vector<std::pair<double, double>> iv;
  for (std::size_t k = 0; k < centers.size(); ++k) {
    const double off = centers[k].tail(centers[k].size() - 1).squaredNorm();
    const double r2 = radii[k] * radii[k] - off;
    if (r2 <= 0.0) continue;
    const double h = std::sqrt(r2);
    iv.emplace_back(centers[k][0] - h, centers[k][0] + h);
  }
  return iv;
}

SurfaceSet SurfaceSet::complemented() const {
  SurfaceSet s = *this;
  s.complement = !complement;
  s.id = id + "^c";
  return s;
}

double model_measure_exact(const std::vector<std::pair<double, double>>& E, double x, double s) {
  auto iv = E;
  std::sort(iv.begin(), iv.end());
  std::vector<std::pair<double, double>> merged;
  for (const auto& p : iv) {
    if (!merged.empty() && p.first <= merged.back().second) merged.back().second = std::max(merged.back().second, p.second);
    else merged.push_back(p);
  }
  double v = 0.0;
  for (const auto& [a, b] : merged) {
    if (s == 0.0) {
      if (x > a && x < b) return 1.0;
      continue;
    }
    v += std::atan((b - x) / s) - std::atan((a - x) / s);
  }
  return s == 0.0 ? 0.0 : v / kPi;
}

double model_measure_exact(int d, const Vec& x, double s, const SurfaceSet& E) {
  double v;
  if (E.centers.empty()) {
    v = 0.0;
  } else if (d == 1) {
    v = model_measure_exact(E.intervals(), x[0], s);
  } else if (d == 2) {
    SurfaceSet plain = E;
    plain.complement = false;
    BoundaryData g;
    g.d = 2;
    const int n = static_cast<int>(E.centers.front().size());
    g.g = [plain, n](const Vec& y) {
      Vec Y = Vec::Zero(n);
      Y.head(2) = y;
      return plain.contains(Y) ? 1.0 : 0.0;
    };
    Vec X = Vec::Zero(4);
    X.head(2) = x;
    X[2] = s;
    v = model_oracle(g, X, 1e-8);
  } else {
    throw Error(ErrorKind::Dimension, "exact model measure supports d in {1, 2}");
  }
  return E.complement ? 1.0 - v : v;
}

ShellModel model_shell(int d) {
  return [d](const Vec& X, const SurfaceSet& E) {
    const int n = static_cast<int>(X.size());
    return model_measure_exact(d, X.head(d), X.tail(n - d).norm(), E);
  };
}

namespace {

int default_level(const BoundarySet& gamma, const Box& window, double h) {
  if (gamma.is_cantor()) {
    int L = 1;
    while (L < 20 && cantor_covering_radius(gamma, L) > h / 4.0) ++L;
    return L;
  }
  double w = 0.0;
  for (int k = 0; k < window.dim(); ++k) w = std::max(w, window.hi[k] - window.lo[k]);
  int L = 1;
  while (L < 24 && w / std::ldexp(1.0, L) > h / 4.0) ++L;
  return L;
}

}  // namespace

MeasureSolver::MeasureSolver(const BoundarySet& gamma, const MatrixField& A, MeasureConfig cfg)
    : gamma_(gamma), cfg_(std::move(cfg)),
      problem_(build_and_assemble(A, cfg_.box, gamma, cfg_.grid, cfg_.assembly)) {
  const Grid& g = *problem_.grid;
  Box window = cfg_.box;
  if (!gamma.is_cantor()) {
    const int d = gamma.param_dim();
    window = Box(cfg_.box.lo.head(d), cfg_.box.hi.head(d));
  }
  const int level = cfg_.quadrature_level >= 0 ? cfg_.quadrature_level : default_level(gamma, window, g.h_min());
  rule_ = sigma_quadrature(gamma, level, window);

  const int n = gamma.n();
  std::vector<std::size_t> order(rule_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return rule_.nodes[a * n] < rule_.nodes[b * n] || (rule_.nodes[a * n] == rule_.nodes[b * n] && a < b);
  });
  std::vector<double> key(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) key[i] = rule_.nodes[order[i] * n];

  const double rho = 0.5 * cfg_.mollification * g.h_min();
  band_ = g.nodes_of(NodeKind::GammaBand);
  stencil_.resize(band_.size());
  for (std::size_t b = 0; b < band_.size(); ++b) {
    const Vec f = g.foot(band_[b]);
    auto lo = std::lower_bound(key.begin(), key.end(), f[0] - rho);
    auto hi = std::upper_bound(key.begin(), key.end(), f[0] + rho);
    double total = 0.0;
    for (auto it = lo; it != hi; ++it) {
      const std::size_t i = order[static_cast<std::size_t>(it - key.begin())];
      if ((rule_.node_vec(i) - f).norm() <= rho) {
        stencil_[b].emplace_back(i, rule_.weights[i]);
        total += rule_.weights[i];
      }
    }
    for (auto& e : stencil_[b]) e.second /= total;
  }
}

double MeasureSolver::sigma(const SurfaceSet& E) const {
  double s = 0.0;
  for (std::size_t i = 0; i < rule_.size(); ++i)
    if (E.contains(rule_.node_vec(i))) s += rule_.weights[i];
  return s;
}

std::vector<double> MeasureSolver::indicator_data(const SurfaceSet& E) const {
  const Grid& g = grid();
  std::vector<double> v(g.size(), 0.0);
  std::vector<char> in(rule_.size());
  for (std::size_t i = 0; i < rule_.size(); ++i) in[i] = E.contains(rule_.node_vec(i)) ? 1 : 0;
  for (std::size_t b = 0; b < band_.size(); ++b) {
    if (stencil_[b].empty()) {
      v[band_[b]] = E.contains(g.foot(band_[b])) ? 1.0 : 0.0;
      continue;
    }
    double s = 0.0;
    for (const auto& [i, w] : stencil_[b])
      if (in[i]) s += w;
    v[band_[b]] = s;
  }
  if (cfg_.shell)
    for (std::size_t i = 0; i < g.size(); ++i)
      if (g.kind(i) == NodeKind::OuterShell) v[i] = cfg_.shell(g.point(i), E);
  return v;
}

const DiscreteMeasure& MeasureSolver::measure(const Vec& X) {
  std::vector<double> key(X.data(), X.data() + X.size());
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  if (!cfg_.box.contains(X)) throw Error(ErrorKind::Domain, "pole outside the solve box");
  if (delta(gamma_, X) <= grid().band_width()) throw Error(ErrorKind::Domain, "pole inside the gamma band");
  return cache_.emplace(std::move(key), measure_at(problem_, X, cfg_.solver)).first->second;
}

MeasureEstimate MeasureSolver::omega(const Vec& X, const SurfaceSet& E) {
  const DiscreteMeasure& mu = measure(X);
  MeasureEstimate m;
  m.pole = X;
  m.set_id = E.id;
  m.sigma = sigma(E);
  m.h_min = h_min();
  m.mollification_width = cfg_.mollification * h_min();

  // Only the Dirichlet nodes carrying weight are evaluated.
  const Grid& g = grid();
  std::vector<char> in(rule_.size());
  for (std::size_t i = 0; i < rule_.size(); ++i) in[i] = E.contains(rule_.node_vec(i)) ? 1 : 0;
  std::vector<std::ptrdiff_t> band_index;
  double v = 0.0;
  for (std::size_t j = 0; j < mu.nodes.size(); ++j) {
    const std::size_t node = mu.nodes[j];
    double gv = 0.0;
    if (g.kind(node) == NodeKind::GammaBand) {
      const auto it = std::lower_bound(band_.begin(), band_.end(), node);
      const auto b = static_cast<std::size_t>(it - band_.begin());
      if (stencil_[b].empty()) {
        gv = E.contains(g.foot(node)) ? 1.0 : 0.0;
      } else {
        for (const auto& [i, w] : stencil_[b])
          if (in[i]) gv += w;
      }
    } else if (cfg_.shell) {
      gv = cfg_.shell(g.point(node), E);
    }
    v += mu.weights[j] * gv;
  }
  m.raw_value = v;
  m.value = std::clamp(v, 0.0, 1.0);
  m.clamped = m.value != v;
  return m;
}

MeasureEstimate harmonic_measure(const BoundarySet& gamma, const MatrixField& A, const Vec& X,
                                 const SurfaceSet& E, const MeasureConfig& cfg) {
  MeasureSolver s(gamma, A, cfg);
  return s.omega(X, E);
}

namespace {

Vec random_in_ball(const Vec& c, double r, std::mt19937_64& rng) {
  std::normal_distribution<double> nrm(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const int n = static_cast<int>(c.size());
  Vec v(n);
  for (int k = 0; k < n; ++k) v[k] = nrm(rng);
  return c + r * std::pow(u01(rng), 1.0 / n) * v.normalized();
}

void finish(RatioReport& r) {
  for (double v : r.ratios) {
    r.max_ratio = std::max(r.max_ratio, v);
    r.min_ratio = std::min(r.min_ratio, v);
  }
  r.constant = r.ratios.empty() ? 0.0 : std::max(r.max_ratio, 1.0 / r.min_ratio);
}

bool usable_pole(MeasureSolver& s, const Vec& X) {
  const Box b = s.grid().box();
  return b.inner_margin(X) > s.h_min() && delta(s.boundary(), X) >= 2.0 * s.h_min();
}

}  // namespace

NondegeneracyReport nondegeneracy_check(MeasureSolver& s, const Vec& x, double r, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const SurfaceSet B = SurfaceSet::ball(x, r, "B");
  NondegeneracyReport rep;
  int tries = 0;
  while (rep.samples < samples && tries < 100 * samples) {
    ++tries;
    const Vec X = random_in_ball(x, 0.5 * r, rng);
    if (!usable_pole(s, X)) continue;
    std::normal_distribution<double> nrm(0.0, 1.0);
    Vec dir(x.size());
    for (int k = 0; k < dir.size(); ++k) dir[k] = nrm(rng);
    std::uniform_real_distribution<double> u(2.0, 4.0);
    const Vec Y = x + r * u(rng) * dir.normalized();
    if (!usable_pole(s, Y)) continue;
    rep.min_inside = std::min(rep.min_inside, s.omega(X, B).value);
    rep.min_outside = std::min(rep.min_outside, s.omega(Y, B.complemented()).value);
    ++rep.samples;
  }
  if (rep.samples == 0) throw Error(ErrorKind::Domain, "no admissible poles for the non-degeneracy check");
  return rep;
}

RatioReport doubling_check(MeasureSolver& s, const Vec& x, double r, const std::vector<Vec>& poles) {
  const SurfaceSet B = SurfaceSet::ball(x, r, "B"), B2 = SurfaceSet::ball(x, 2 * r, "2B");
  RatioReport rep;
  for (const Vec& X : poles) {
    if ((X - x).norm() < 4 * r) throw Error(ErrorKind::Precondition, "doubling poles must lie outside 4B");
    rep.ratios.push_back(s.omega(X, B2).value / s.omega(X, B).value);
  }
  finish(rep);
  return rep;
}

RatioReport change_of_pole_check(MeasureSolver& s, const Vec& x, double r, const std::vector<SurfaceSet>& sets,
                                 const Vec& X) {
  const SurfaceSet B = SurfaceSet::ball(x, r, "B");
  const Vec AB = corkscrew(s.boundary(), x, r).point;
  const double wB = s.omega(X, B).value;
  RatioReport rep;
  for (const auto& E : sets) rep.ratios.push_back((s.omega(X, E).value / wB) / s.omega(AB, E).value);
  finish(rep);
  return rep;
}

RatioReport green_measure_compare(MeasureSolver& s, const Vec& x, double r, const std::vector<Vec>& poles) {
  const SurfaceSet B = SurfaceSet::ball(x, r, "B");
  const Vec AB = corkscrew(s.boundary(), x, r).point;
  const Grid& g = s.grid();
  // Green pole at the interior node nearest to A_B.
  const auto cell = g.locate(AB);
  std::size_t best = 0;
  double bd = kInf;
  const int n = g.dim();
  for (unsigned m = 0; m < (1U << n); ++m) {
    std::size_t node = 0;
    for (int k = 0; k < n; ++k) node += static_cast<std::size_t>(cell.lower[k] + static_cast<int>((m >> k) & 1U)) * g.stride(k);
    if (g.kind(node) != NodeKind::Interior) continue;
    const double dd = (g.point(node) - AB).norm();
    if (dd < bd) {
      bd = dd;
      best = node;
    }
  }
  if (!std::isfinite(bd)) throw Error(ErrorKind::Domain, "corkscrew point has no interior grid node");
  const SolutionField G = green_function(s.problem(), best);
  const double d = s.boundary().d();
  RatioReport rep;
  for (const Vec& X : poles) rep.ratios.push_back(s.omega(X, B).value / (std::pow(r, 1.0 - d) * G.at(X)));
  finish(rep);
  return rep;
}

double AinftyReport::at(double delta) const {
  double e = 0.0;
  for (const auto& p : points)
    if (p.omega < delta) e = std::max(e, p.fraction);
  return e;
}

std::vector<SurfaceSet> random_subsets(const MeasureSolver& s, const ProbeBall& B, int count, std::mt19937_64& rng,
                                       int* skipped) {
  const QuadratureRule& rule = s.rule();
  std::vector<std::size_t> inside;
  double sigmaB = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    if ((rule.node_vec(i) - B.center).norm() <= B.radius) {
      inside.push_back(i);
      sigmaB += rule.weights[i];
    }
  }
  if (inside.empty() || sigmaB <= 0.0) throw Error(ErrorKind::Domain, "probe ball contains no quadrature nodes");
  const double rmin = s.resolution_radius();
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, inside.size() - 1);
  std::vector<SurfaceSet> out;
  int skip = 0;
  for (int c = 0; c < count; ++c) {
    const double target = std::exp(std::log(0.01) + (std::log(0.9) - std::log(0.01)) * u01(rng));
    SurfaceSet E;
    std::ostringstream id;
    id << "set" << c;
    E.id = id.str();
    double frac = 0.0;
    int attempts = 0;
    while (frac < target && attempts < 60) {
      ++attempts;
      const Vec y = rule.node_vec(inside[pick(rng)]);
      const double room = B.radius - (y - B.center).norm();
      double rho = B.radius * std::exp(std::log(0.02) + (std::log(0.5) - std::log(0.02)) * u01(rng));
      rho = std::min(rho, room);
      if (rho < rmin) continue;
      E.centers.push_back(y);
      E.radii.push_back(rho);
      double sig = 0.0;
      for (std::size_t i : inside)
        if (E.contains(rule.node_vec(i))) sig += rule.weights[i];
      frac = sig / sigmaB;
    }
    if (E.centers.empty()) {
      ++skip;
      continue;
    }
    out.push_back(std::move(E));
  }
  if (skipped) *skipped += skip;
  return out;
}

AinftyReport ainfty_probe(MeasureSolver& s, const std::vector<ProbeBall>& balls, int sets_per_ball,
                          const std::vector<double>& thresholds, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  AinftyReport rep;
  rep.thresholds = thresholds;
  std::sort(rep.thresholds.begin(), rep.thresholds.end());
  for (std::size_t b = 0; b < balls.size(); ++b) {
    const auto& B = balls[b];
    const Vec AB = corkscrew(s.boundary(), B.center, B.radius).point;
    const double sigmaB = s.sigma(SurfaceSet::ball(B.center, B.radius));
    const auto sets = random_subsets(s, B, sets_per_ball, rng, &rep.skipped);
    for (const auto& E : sets) {
      const MeasureEstimate m = s.omega(AB, E);
      rep.points.push_back({b, E.id, m.value, m.sigma / sigmaB});
    }
  }
  for (double t : rep.thresholds) rep.envelope.push_back(rep.at(t));
  return rep;
}

ComparabilityReport comparability_check(MeasureSolver& s, double alpha, const Vec& X,
                                        const std::vector<SurfaceSet>& sets) {
  const BoundarySet& gamma = s.boundary();
  const double d = gamma.d();
  if (std::abs(gamma.n() - (d + 2.0 + alpha)) > 1e-9) {
    std::ostringstream os;
    os << "comparability needs n = d + 2 + alpha; got n = " << gamma.n() << ", d = " << d << ", alpha = " << alpha;
    throw Error(ErrorKind::Precondition, os.str());
  }
  ComparabilityReport rep;
  rep.R = delta(gamma, X);
  const double Rd = std::pow(rep.R, d);
  for (const auto& E : sets) {
    const MeasureEstimate m = s.omega(X, E);
    const double lo = m.sigma / (Rd * m.value);
    const double up = Rd * m.value / m.sigma;
    rep.lower.push_back(lo);
    rep.upper.push_back(up);
    rep.constant = std::max({rep.constant, lo, up});
  }
  return rep;
}

}  // namespace lowdim
