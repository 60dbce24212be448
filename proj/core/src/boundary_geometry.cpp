#include "lowdim/boundary_geometry.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace lowdim {

// ---------------------------------------------------------------------------
// Graph families

GraphFunction affine_graph(const Vec& offset, const Mat& slope) {
  if (slope.rows() != offset.size())
    throw Error(ErrorKind::Dimension, "affine graph: slope rows must match offset size");
  GraphFunction g;
  g.d = static_cast<int>(slope.cols());
  g.codim = static_cast<int>(offset.size());
  g.value = [offset, slope](const Vec& x) -> Vec { return offset + slope * x; };
  g.jacobian = [slope](const Vec&) -> Mat { return slope; };
  g.hessian = [](const Vec&, int, int, int) { return 0.0; };
  g.lipschitz = slope.size() ? slope.jacobiSvd().singularValues()(0) : 0.0;
  g.description = "affine";
  return g;
}

GraphFunction sine_graph(int d, int codim, double amplitude, double frequency, double phase) {
  GraphFunction g;
  g.d = d;
  g.codim = codim;
  g.value = [=](const Vec& x) -> Vec {
    Vec v = Vec::Zero(codim);
    v[0] = amplitude * std::sin(frequency * x[0] + phase);
    return v;
  };
  g.jacobian = [=](const Vec& x) -> Mat {
    Mat j = Mat::Zero(codim, d);
    j(0, 0) = amplitude * frequency * std::cos(frequency * x[0] + phase);
    return j;
  };
  g.hessian = [=](const Vec& x, int c, int i, int j) -> double {
    if (c != 0 || i != 0 || j != 0) return 0.0;
    return -amplitude * frequency * frequency * std::sin(frequency * x[0] + phase);
  };
  g.lipschitz = std::abs(amplitude * frequency);
  std::ostringstream os;
  os << "sine(amplitude=" << amplitude << ",frequency=" << frequency << ")";
  g.description = os.str();
  return g;
}

GraphFunction cone_graph(int d, int codim, double eps) {
  GraphFunction g;
  g.d = d;
  g.codim = codim;
  g.value = [=](const Vec& x) -> Vec {
    Vec v = Vec::Zero(codim);
    v[0] = eps * x.norm();
    return v;
  };
  g.jacobian = [=](const Vec& x) -> Mat {
    Mat j = Mat::Zero(codim, d);
    const double r = x.norm();
    if (r > 0) j.row(0) = eps * x.transpose() / r;
    return j;
  };
  g.lipschitz = std::abs(eps);
  std::ostringstream os;
  os << "cone(eps=" << eps << ")";
  g.description = os.str();
  return g;
}

GraphFunction bump_graph(int d, int codim, double amplitude, double width, const Vec& center) {
  if (center.size() != d) throw Error(ErrorKind::Dimension, "bump center dimension");
  if (!(width > 0)) throw Error(ErrorKind::Config, "bump width must be positive");
  GraphFunction g;
  g.d = d;
  g.codim = codim;
  g.value = [=](const Vec& x) -> Vec {
    Vec v = Vec::Zero(codim);
    v[0] = amplitude * std::exp(-(x - center).squaredNorm() / (width * width));
    return v;
  };
  g.jacobian = [=](const Vec& x) -> Mat {
    Mat j = Mat::Zero(codim, d);
    const double e = amplitude * std::exp(-(x - center).squaredNorm() / (width * width));
    j.row(0) = (-2.0 * e / (width * width)) * (x - center).transpose();
    return j;
  };
  g.hessian = [=](const Vec& x, int c, int i, int j) -> double {
    if (c != 0) return 0.0;
    const double w2 = width * width;
    const double e = amplitude * std::exp(-(x - center).squaredNorm() / w2);
    const double yi = x[i] - center[i], yj = x[j] - center[j];
    return e * (4.0 * yi * yj / (w2 * w2) - (i == j ? 2.0 / w2 : 0.0));
  };
  // max |phi'| = amplitude * sqrt(2) / width * exp(-1/2)
  g.lipschitz = std::abs(amplitude) * std::sqrt(2.0) / width * std::exp(-0.5);
  std::ostringstream os;
  os << "bump(amplitude=" << amplitude << ",width=" << width << ")";
  g.description = os.str();
  return g;
}

GraphFunction piecewise_linear_graph(int codim, std::vector<double> knots,
                                     std::vector<double> values) {
  if (knots.size() < 2 || knots.size() != values.size())
    throw Error(ErrorKind::Config, "piecewise-linear graph needs matching knots/values (>= 2)");
  for (std::size_t i = 1; i < knots.size(); ++i)
    if (!(knots[i] > knots[i - 1])) throw Error(ErrorKind::Config, "knots must increase");
  std::vector<double> slopes(knots.size() - 1);
  double lip = 0;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    slopes[i] = (values[i + 1] - values[i]) / (knots[i + 1] - knots[i]);
    lip = std::max(lip, std::abs(slopes[i]));
  }
  auto seg = [knots](double x) {
    auto it = std::upper_bound(knots.begin(), knots.end(), x);
    std::ptrdiff_t k = std::distance(knots.begin(), it) - 1;
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(k, 0, knots.size() - 2));
  };
  GraphFunction g;
  g.d = 1;
  g.codim = codim;
  g.value = [=](const Vec& x) -> Vec {
    const std::size_t k = seg(x[0]);
    Vec v = Vec::Zero(codim);
    v[0] = values[k] + slopes[k] * (x[0] - knots[k]);
    return v;
  };
  g.jacobian = [=](const Vec& x) -> Mat {
    Mat j = Mat::Zero(codim, 1);
    j(0, 0) = slopes[seg(x[0])];
    return j;
  };
  g.lipschitz = lip;
  g.description = "piecewise_linear";
  return g;
}

// ---------------------------------------------------------------------------
// BoundarySet

namespace {

void check_dims(double d, int n) {
  if (n < 2) throw Error(ErrorKind::Dimension, "ambient dimension must be >= 2");
  if (!(d > 0.0)) throw Error(ErrorKind::Dimension, "boundary dimension must be positive");
  if (!(d < n - 1.0))
    throw Error(ErrorKind::Dimension, "boundary dimension must satisfy d < n - 1");
}

double sampled_lipschitz(const GraphFunction& g) {
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> u(-10.0, 10.0), s(-3.0, 0.0);
  double est = 0.0;
  for (int k = 0; k < 4000; ++k) {
    Vec x(g.d), h(g.d);
    for (int i = 0; i < g.d; ++i) x[i] = u(rng);
    for (int i = 0; i < g.d; ++i) h[i] = u(rng);
    h *= std::pow(10.0, s(rng)) / h.norm();
    est = std::max(est, (g.value(x + h) - g.value(x)).norm() / h.norm());
  }
  return est;
}

}  // namespace

BoundarySet BoundarySet::plane(int d, int n) {
  check_dims(d, n);
  BoundarySet b;
  b.kind_ = AffinePlane{};
  b.n_ = n;
  b.d_ = d;
  return b;
}

BoundarySet BoundarySet::graph(GraphFunction phi, int n) {
  if (!phi.value || !phi.jacobian) throw Error(ErrorKind::Config, "graph map is missing callables");
  check_dims(phi.d, n);
  if (phi.codim != n - phi.d)
    throw Error(ErrorKind::Dimension, "graph codimension must equal n - d");
  const double est = sampled_lipschitz(phi);
  if (est > phi.lipschitz * 1.05 + 1e-12) {
    std::ostringstream os;
    os << "sampled Lipschitz constant " << est << " exceeds declared " << phi.lipschitz;
    throw Error(ErrorKind::Config, os.str());
  }
  BoundarySet b;
  b.n_ = n;
  b.d_ = phi.d;
  b.kind_ = LipschitzGraph{std::move(phi)};
  return b;
}

BoundarySet BoundarySet::cantor(int n, std::vector<SimilarityMap> maps,
                                std::optional<double> declared_dim) {
  if (maps.size() < 2) throw Error(ErrorKind::Config, "Cantor set needs at least two maps");
  for (const auto& m : maps) {
    if (!(m.ratio > 0.0 && m.ratio < 1.0))
      throw Error(ErrorKind::Config, "similarity ratios must lie in (0, 1)");
    if (m.offset.size() != n) throw Error(ErrorKind::Dimension, "map offset dimension != n");
  }
  auto f = [&](double s) {
    double acc = -1.0;
    for (const auto& m : maps) acc += std::pow(m.ratio, s);
    return acc;
  };
  double lo = 0.0, hi = 1.0;
  while (f(hi) > 0.0) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? lo : hi) = mid;
  }
  double d = 0.5 * (lo + hi);
  for (int it = 0; it < 3; ++it) {
    double df = 0.0;
    for (const auto& m : maps) df += std::pow(m.ratio, d) * std::log(m.ratio);
    if (df != 0.0) d -= f(d) / df;
  }
  if (declared_dim) {
    double acc = 0.0;
    for (const auto& m : maps) acc += std::pow(m.ratio, *declared_dim);
    if (std::abs(acc - 1.0) > 1e-12 || std::abs(*declared_dim - d) > 1e-9) {
      std::ostringstream os;
      os << "inconsistent Cantor ratios: sum r_i^d = " << acc << " for declared d = "
         << *declared_dim << " (similarity dimension " << d << ")";
      throw Error(ErrorKind::Config, os.str());
    }
  }
  check_dims(d, n);

  BoundarySet b;
  b.n_ = n;
  b.d_ = d;
  std::vector<Vec> fixed;
  for (const auto& m : maps) fixed.push_back(m.offset / (1.0 - m.ratio));
  b.anchor_ = fixed.front();
  b.hull_center_ = Vec::Zero(n);
  for (const auto& p : fixed) b.hull_center_ += p;
  b.hull_center_ /= static_cast<double>(fixed.size());
  double diam = 0.0, rad = 0.0;
  for (std::size_t i = 0; i < fixed.size(); ++i) {
    rad = std::max(rad, (fixed[i] - b.hull_center_).norm());
    for (std::size_t j = i + 1; j < fixed.size(); ++j)
      diam = std::max(diam, (fixed[i] - fixed[j]).norm());
  }
  b.diameter_ = diam;
  b.hull_radius_ = rad;
  b.kind_ = SelfSimilarCantor{std::move(maps)};
  return b;
}

BoundarySet BoundarySet::four_corner_cantor(int n) {
  if (n < 3) throw Error(ErrorKind::Dimension, "four-corner Cantor set needs n >= 3");
  std::vector<SimilarityMap> maps;
  for (int c = 0; c < 4; ++c) {
    Vec b = Vec::Zero(n);
    b[0] = (c & 1) ? 0.75 : 0.0;
    b[1] = (c & 2) ? 0.75 : 0.0;
    maps.push_back({0.25, b});
  }
  return cantor(n, std::move(maps));
}

BoundarySet BoundarySet::middle_thirds(int n) {
  Vec b0 = Vec::Zero(n), b1 = Vec::Zero(n);
  b1[0] = 2.0 / 3.0;
  return cantor(n, {{1.0 / 3.0, b0}, {1.0 / 3.0, b1}});
}

int BoundarySet::param_dim() const {
  if (is_cantor()) throw Error(ErrorKind::Precondition, "Cantor sets have no parameter space");
  return static_cast<int>(d_);
}

const GraphFunction& BoundarySet::graph_function() const {
  if (!is_graph()) throw Error(ErrorKind::Precondition, "boundary is not a graph");
  return std::get<LipschitzGraph>(kind_).phi;
}

const std::vector<SimilarityMap>& BoundarySet::maps() const {
  if (!is_cantor()) throw Error(ErrorKind::Precondition, "boundary is not a Cantor set");
  return std::get<SelfSimilarCantor>(kind_).maps;
}

double BoundarySet::lipschitz() const { return is_graph() ? graph_function().lipschitz : 0.0; }

std::string BoundarySet::describe() const {
  std::ostringstream os;
  os << std::setprecision(12);
  if (is_plane()) os << "plane(d=" << d_ << ",n=" << n_ << ")";
  if (is_graph()) os << "graph(" << graph_function().description << ",d=" << d_ << ",n=" << n_ << ")";
  if (is_cantor()) os << "cantor(maps=" << maps().size() << ",d=" << d_ << ",n=" << n_ << ")";
  return os.str();
}

Vec BoundarySet::lift(const Vec& x) const {
  const int d = param_dim();
  Vec p = Vec::Zero(n_);
  p.head(d) = x.head(d);
  if (is_graph()) p.tail(n_ - d) = graph_function().value(x.head(d));
  return p;
}

Mat BoundarySet::tangent_frame(const Vec& x) const {
  const int d = param_dim();
  Mat t = Mat::Zero(n_, d);
  t.topRows(d).setIdentity();
  if (is_graph()) t.bottomRows(n_ - d) = graph_function().jacobian(x.head(d));
  return t;
}

// ---------------------------------------------------------------------------
// JSON descriptors

namespace {

Vec to_vec(const nlohmann::json& j) {
  std::vector<double> v = j.get<std::vector<double>>();
  return Eigen::Map<Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

GraphFunction graph_from_json(const nlohmann::json& p, int n) {
  const std::string type = p.at("type").get<std::string>();
  const int d = p.value("d", 1);
  const int codim = n - d;
  if (type == "sine")
    return sine_graph(d, codim, p.at("amplitude").get<double>(), p.value("frequency", 1.0),
                      p.value("phase", 0.0));
  if (type == "cone") return cone_graph(d, codim, p.at("eps").get<double>());
  if (type == "bump")
    return bump_graph(d, codim, p.at("amplitude").get<double>(), p.at("width").get<double>(),
                      p.contains("center") ? to_vec(p.at("center")) : Vec(Vec::Zero(d)));
  if (type == "affine") {
    Vec off = p.contains("offset") ? to_vec(p.at("offset")) : Vec(Vec::Zero(codim));
    auto rows = p.at("slope").get<std::vector<std::vector<double>>>();
    Mat s(static_cast<Eigen::Index>(rows.size()), d);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (static_cast<int>(rows[i].size()) != d) throw Error(ErrorKind::Config, "affine slope shape");
      for (int j = 0; j < d; ++j) s(static_cast<Eigen::Index>(i), j) = rows[i][j];
    }
    return affine_graph(off, s);
  }
  if (type == "piecewise_linear")
    return piecewise_linear_graph(codim, p.at("knots").get<std::vector<double>>(),
                                  p.at("values").get<std::vector<double>>());
  throw Error(ErrorKind::Config, "unknown graph type '" + type + "'");
}

}  // namespace

BoundarySet make_boundary(const nlohmann::json& spec) {
  try {
    const std::string kind = spec.at("kind").get<std::string>();
    const int n = spec.at("n").get<int>();
    if (kind == "plane") {
      const double d = spec.at("d").get<double>();
      if (d != std::floor(d)) throw Error(ErrorKind::Dimension, "plane dimension must be an integer");
      return BoundarySet::plane(static_cast<int>(d), n);
    }
    if (kind == "graph") {
      GraphFunction phi = graph_from_json(spec.at("phi"), n);
      if (spec.contains("lipschitz")) phi.lipschitz = spec.at("lipschitz").get<double>();
      return BoundarySet::graph(std::move(phi), n);
    }
    if (kind == "cantor") {
      if (spec.contains("preset")) {
        const std::string preset = spec.at("preset").get<std::string>();
        if (preset == "middle_thirds") return BoundarySet::middle_thirds(n);
        if (preset == "four_corners") return BoundarySet::four_corner_cantor(n);
        throw Error(ErrorKind::Config, "unknown Cantor preset '" + preset + "'");
      }
      std::vector<SimilarityMap> maps;
      for (const auto& m : spec.at("maps")) maps.push_back({m.at("ratio").get<double>(), to_vec(m.at("offset"))});
      std::optional<double> declared;
      if (spec.contains("d")) declared = spec.at("d").get<double>();
      return BoundarySet::cantor(n, std::move(maps), declared);
    }
    throw Error(ErrorKind::Config, "unknown boundary kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Config, std::string("boundary descriptor: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Quadrature

Vec QuadratureRule::node_vec(std::size_t i) const {
  return Eigen::Map<const Vec>(nodes.data() + i * static_cast<std::size_t>(n), n);
}

Vec QuadratureRule::param_vec(std::size_t i) const {
  return Eigen::Map<const Vec>(params.data() + i * static_cast<std::size_t>(param_dim), param_dim);
}

double QuadratureRule::total_weight() const {
  return std::accumulate(weights.begin(), weights.end(), 0.0);
}

double QuadratureRule::ball_mass(const Vec& x, double r) const {
  const double r2 = r * r;
  double acc = 0.0;
  for (std::size_t i = 0; i < size(); ++i) {
    const double* y = nodes.data() + i * static_cast<std::size_t>(n);
    double s = 0.0;
    for (int k = 0; k < n; ++k) s += (x[k] - y[k]) * (x[k] - y[k]);
    if (s <= r2) acc += weights[i];
  }
  return acc;
}

namespace {

QuadratureRule tensor_rule(const BoundarySet& gamma, int level, const Box& window_in,
                           std::size_t max_nodes) {
  const int d = gamma.param_dim();
  const int n = gamma.n();
  Box window = window_in;
  if (window.dim() == n) window = Box(window_in.lo.head(d), window_in.hi.head(d));
  if (window.dim() != d) throw Error(ErrorKind::Dimension, "quadrature window dimension");
  for (int k = 0; k < d; ++k)
    if (!(window.hi[k] > window.lo[k])) throw Error(ErrorKind::Domain, "empty quadrature window");
  if (level < 0 || level > 40) throw Error(ErrorKind::Precondition, "quadrature level out of range");
  const std::size_t per_axis = (std::size_t{1} << level) + 1;
  double total = 1.0;
  for (int k = 0; k < d; ++k) total *= static_cast<double>(per_axis);
  if (total > static_cast<double>(max_nodes)) {
    std::ostringstream os;
    os << "quadrature level " << level << " needs " << total << " nodes, budget " << max_nodes;
    throw Error(ErrorKind::Budget, os.str());
  }
  const std::size_t count = static_cast<std::size_t>(total);

  QuadratureRule rule;
  rule.n = n;
  rule.d = d;
  rule.level = level;
  rule.window = window;
  rule.param_dim = d;
  rule.nodes.resize(count * n);
  rule.weights.resize(count);
  rule.params.resize(count * d);

  Vec h(d);
  for (int k = 0; k < d; ++k) h[k] = (window.hi[k] - window.lo[k]) / static_cast<double>(per_axis - 1);
  const bool is_graph = gamma.is_graph();
  std::vector<std::size_t> idx(d, 0);
  Vec x(d);
  for (std::size_t c = 0; c < count; ++c) {
    std::size_t rem = c;
    double w = 1.0;
    for (int k = d - 1; k >= 0; --k) {
      idx[k] = rem % per_axis;
      rem /= per_axis;
      x[k] = idx[k] + 1 == per_axis ? window.hi[k] : window.lo[k] + h[k] * static_cast<double>(idx[k]);
      w *= h[k] * ((idx[k] == 0 || idx[k] + 1 == per_axis) ? 0.5 : 1.0);
    }
    Vec p = gamma.lift(x);
    if (is_graph) {
      Mat t = gamma.tangent_frame(x);
      w *= std::sqrt((t.transpose() * t).determinant());
    }
    for (int k = 0; k < d; ++k) rule.params[c * d + k] = x[k];
    for (int k = 0; k < n; ++k) rule.nodes[c * n + k] = p[k];
    rule.weights[c] = w;
  }
  rule.covering_radius = 0.5 * h.norm() * std::sqrt(1.0 + gamma.lipschitz() * gamma.lipschitz());
  return rule;
}

QuadratureRule cantor_rule(const BoundarySet& gamma, int level, const Box& window,
                           std::size_t max_nodes) {
  const auto& maps = gamma.maps();
  const int n = gamma.n();
  if (window.dim() != n) throw Error(ErrorKind::Dimension, "Cantor window must be an ambient box");
  if (level < 0) throw Error(ErrorKind::Precondition, "quadrature level must be >= 0");
  const double m = static_cast<double>(maps.size());
  if (std::pow(m, level) > static_cast<double>(max_nodes)) {
    std::ostringstream os;
    os << "Cantor level " << level << " needs " << std::pow(m, level) << " nodes, budget " << max_nodes;
    throw Error(ErrorKind::Budget, os.str());
  }
  const double d = gamma.d();
  const Vec anchor = gamma.cantor_anchor();
  std::vector<double> pts(anchor.data(), anchor.data() + n);
  std::vector<double> wts{1.0};
  for (int l = 0; l < level; ++l) {
    std::vector<double> np;
    std::vector<double> nw;
    np.reserve(pts.size() * maps.size());
    nw.reserve(wts.size() * maps.size());
    for (const auto& mp : maps) {
      const double rw = std::pow(mp.ratio, d);
      for (std::size_t i = 0; i < wts.size(); ++i) {
        for (int k = 0; k < n; ++k) np.push_back(mp.ratio * pts[i * n + k] + mp.offset[k]);
        nw.push_back(wts[i] * rw);
      }
    }
    pts.swap(np);
    wts.swap(nw);
  }
  QuadratureRule rule;
  rule.n = n;
  rule.d = d;
  rule.level = level;
  rule.window = window;
  for (std::size_t i = 0; i < wts.size(); ++i) {
    Vec p = Eigen::Map<const Vec>(pts.data() + i * n, n);
    if (!window.contains(p)) continue;
    rule.nodes.insert(rule.nodes.end(), pts.begin() + static_cast<std::ptrdiff_t>(i * n),
                      pts.begin() + static_cast<std::ptrdiff_t>((i + 1) * n));
    rule.weights.push_back(wts[i]);
  }
  if (rule.weights.empty()) throw Error(ErrorKind::Domain, "window does not meet the Cantor set");
  rule.covering_radius = cantor_covering_radius(gamma, level);
  return rule;
}

}  // namespace

double cantor_covering_radius(const BoundarySet& gamma, int level) {
  double rmax = 0.0;
  for (const auto& m : gamma.maps()) rmax = std::max(rmax, m.ratio);
  return std::pow(rmax, level) * gamma.diameter();
}

QuadratureRule sigma_quadrature(const BoundarySet& gamma, int level, const Box& window,
                                std::size_t max_nodes) {
  if (gamma.is_cantor()) return cantor_rule(gamma, level, window, max_nodes);
  return tensor_rule(gamma, level, window, max_nodes);
}

void write_quadrature_csv(const QuadratureRule& rule, std::ostream& out) {
  for (int k = 0; k < rule.n; ++k) out << "x" << (k + 1) << ",";
  out << "weight\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < rule.size(); ++i) {
    for (int k = 0; k < rule.n; ++k) out << rule.nodes[i * rule.n + k] << ",";
    out << rule.weights[i] << "\n";
  }
}

// ---------------------------------------------------------------------------
// Distance

namespace {

DistanceResult graph_distance(const BoundarySet& gamma, const Vec& X) {
  const int d = gamma.param_dim();
  const int n = gamma.n();
  const GraphFunction& phi = gamma.graph_function();
  auto dist2 = [&](const Vec& s) { return (X - gamma.lift(s)).squaredNorm(); };

  // The minimizer lies within R0 of the parameter projection.
  const Vec x0 = X.head(d);
  const double R0 = std::sqrt(dist2(x0));
  Vec best = x0;
  double best_d2 = R0 * R0;
  if (R0 > 0.0) {
    const int k = d == 1 ? 16 : (d == 2 ? 6 : 3);
    const int side = 2 * k + 1;
    std::size_t total = 1;
    for (int i = 0; i < d; ++i) total *= static_cast<std::size_t>(side);
    Vec s(d);
    for (std::size_t c = 0; c < total; ++c) {
      std::size_t rem = c;
      for (int i = 0; i < d; ++i) {
        s[i] = x0[i] + R0 * (static_cast<double>(rem % side) - k) / k;
        rem /= side;
      }
      const double v = dist2(s);
      if (v < best_d2) {
        best_d2 = v;
        best = s;
      }
    }
  }
  // Gauss-Newton with backtracking on |X - (s, phi(s))|^2.
  Vec s = best;
  double f = best_d2;
  double last_step = 0.0;
  for (int it = 0; it < 100; ++it) {
    Mat J = Mat::Zero(n, d);
    J.topRows(d).setIdentity();
    J.bottomRows(n - d) = phi.jacobian(s);
    const Vec r = X - gamma.lift(s);
    const Vec g = J.transpose() * r;
    const Vec step = (J.transpose() * J).ldlt().solve(g);
    double lam = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 40; ++ls) {
      const Vec cand = s + lam * step;
      const double fc = dist2(cand);
      if (fc <= f) {
        moved = fc < f;
        s = cand;
        f = fc;
        break;
      }
      lam *= 0.5;
    }
    last_step = lam * step.norm();
    if (!moved || last_step <= 1e-15 * (1.0 + s.norm())) break;
  }
  DistanceResult res;
  res.value = std::sqrt(f);
  res.foot = gamma.lift(s);
  res.error = std::max(1e-14, last_step * (1.0 + phi.lipschitz));
  return res;
}

DistanceResult cantor_distance(const BoundarySet& gamma, const Vec& X, int level) {
  const auto& maps = gamma.maps();
  const int n = gamma.n();
  const std::size_t m = maps.size();
  // A cylinder is the image of the set under x -> scale * x + shift.
  struct Frame {
    Vec shift;
    double scale;
    int depth;
    double lb;
  };
  const Vec& c0 = gamma.hull_center();
  const Vec& a0 = gamma.cantor_anchor();
  double best = kInf;
  Vec best_node;
  std::vector<Frame> stack;
  stack.push_back({Vec::Zero(n), 1.0, 0, 0.0});
  const double R = gamma.hull_radius();
  while (!stack.empty()) {
    Frame f = std::move(stack.back());
    stack.pop_back();
    if (f.lb > best) continue;
    if (f.depth == level) {
      const Vec anchor = f.scale * a0 + f.shift;
      const double dd = (X - anchor).norm();
      if (dd < best) {
        best = dd;
        best_node = anchor;
      }
      continue;
    }
    // Nearest child is pushed last so it is expanded first; ties keep the lowest index.
    std::vector<std::pair<double, std::size_t>> order;
    order.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
      const auto& mp = maps[i];
      const double sc = f.scale * mp.ratio;
      const double lbc = (X - (sc * c0 + f.scale * mp.offset + f.shift)).norm() - sc * R;
      if (lbc <= best) order.emplace_back(lbc, i);
    }
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second > b.second;
    });
    for (const auto& [lbc, i] : order)
      stack.push_back({f.scale * maps[i].offset + f.shift, f.scale * maps[i].ratio, f.depth + 1, lbc});
  }
  DistanceResult res;
  res.value = best;
  res.foot = best_node;
  res.error = cantor_covering_radius(gamma, level);
  return res;
}

}  // namespace

DistanceResult distance(const BoundarySet& gamma, const Vec& X, int cantor_level) {
  if (X.size() != gamma.n()) throw Error(ErrorKind::Dimension, "point dimension != n");
  if (gamma.is_plane()) {
    const int d = gamma.param_dim();
    DistanceResult res;
    res.value = X.tail(gamma.n() - d).norm();
    res.foot = Vec::Zero(gamma.n());
    res.foot.head(d) = X.head(d);
    return res;
  }
  if (gamma.is_graph()) return graph_distance(gamma, X);
  return cantor_distance(gamma, X, cantor_level);
}

// ---------------------------------------------------------------------------
// Ahlfors regularity check

ArReport verify_ar(const BoundarySet& gamma, const QuadratureRule& rule, int trials,
                   std::uint64_t seed) {
  if (trials < 1) throw Error(ErrorKind::Precondition, "trials must be >= 1");
  const double d = gamma.d();
  const double rmin = 8.0 * rule.covering_radius;
  double rmax;
  if (gamma.bounded()) {
    rmax = gamma.diameter() / 4.0;
  } else {
    rmax = 0.25 * rule.window.extent().minCoeff();
  }
  if (!(rmin < rmax)) throw Error(ErrorKind::Precondition, "rule too coarse for the requested minimum radius");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, rule.size() - 1);
  ArReport rep;
  rep.trials = trials;
  for (int t = 0; t < trials; ++t) {
    const double r = rmin * std::pow(rmax / rmin, u01(rng));
    std::size_t i = pick(rng);
    if (!gamma.bounded()) {
      // Keep the ball's parameter footprint inside the window.
      int tries = 0;
      while (rule.window.inner_margin(rule.param_vec(i)) < r && ++tries < 10000) i = pick(rng);
      if (tries >= 10000) throw Error(ErrorKind::Precondition, "no node with enough margin for AR sampling");
    }
    const Vec x = rule.node_vec(i);
    const double s = rule.ball_mass(x, r);
    const double rd = std::pow(r, d);
    const double ratio = std::max(s / rd, rd / s);
    if (ratio > rep.c0_estimate) {
      rep.c0_estimate = ratio;
      rep.worst_x = x;
      rep.worst_r = r;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Corkscrew points

namespace {

std::vector<Vec> sphere_lattice(int k) {
  std::vector<Vec> dirs;
  std::size_t total = 1;
  for (int i = 0; i < k; ++i) total *= 3;
  for (std::size_t c = 0; c < total; ++c) {
    std::size_t rem = c;
    Vec v(k);
    for (int i = 0; i < k; ++i) {
      v[i] = static_cast<double>(rem % 3) - 1.0;
      rem /= 3;
    }
    if (v.squaredNorm() == 0.0) continue;
    dirs.push_back(v.normalized());
  }
  return dirs;
}

}  // namespace

std::vector<Vec> corkscrew_directions(const BoundarySet& gamma, const Vec& x) {
  const int n = gamma.n();
  std::vector<Vec> dirs;
  if (gamma.is_cantor()) {
    for (int k = 0; k < n; ++k) {
      Vec e = Vec::Zero(n);
      e[k] = 1.0;
      dirs.push_back(e);
      dirs.push_back(-e);
    }
    for (const Vec& v : sphere_lattice(n))
      if ((v.array() != 0.0).count() > 1) dirs.push_back(v);
    return dirs;
  }
  const int d = gamma.param_dim();
  const Mat T = gamma.tangent_frame(x.head(d));
  Eigen::HouseholderQR<Mat> qr(T);
  const Mat Q = qr.householderQ() * Mat::Identity(n, n);
  const Mat N = Q.rightCols(n - d);
  for (const Vec& v : sphere_lattice(n - d)) dirs.push_back(N * v);
  return dirs;
}

CorkscrewResult corkscrew(const BoundarySet& gamma, const Vec& x, double r) {
  if (!(r > 0.0)) throw Error(ErrorKind::Precondition, "corkscrew radius must be positive");
  CorkscrewResult best;
  best.delta = -1.0;
  for (const Vec& dir : corkscrew_directions(gamma, x)) {
    const Vec A = x + 0.5 * r * dir;
    const double dA = distance(gamma, A).value;
    if (dA > best.delta) {
      best.delta = dA;
      best.point = A;
    }
  }
  if (!(best.delta > 0.0)) throw Error(ErrorKind::Domain, "corkscrew search failed");
  best.c1 = r / best.delta;
  return best;
}

// ---------------------------------------------------------------------------
// Harnack chains

namespace {

constexpr double kStep = 0.49;

struct ChainBuilder {
  const BoundarySet& gamma;
  std::vector<Vec> pts;
  std::vector<double> dl;

  double delta_of(const Vec& Z) const { return distance(gamma, Z).value; }

  void connect(const Vec& P, double dP, const Vec& Q, double dQ, int depth) {
    if (depth > 24) throw Error(ErrorKind::Domain, "Harnack chain failed to bridge");
    const double floor = 0.25 * std::min(dP, dQ);
    const std::size_t mark = pts.size();
    Vec Z = P;
    double dZ = dP;
    for (int steps = 0; steps < 20000; ++steps) {
      const double gap = (Q - Z).norm();
      if (gap <= kStep * dZ) {
        pts.push_back(Q);
        dl.push_back(dQ);
        return;
      }
      const Vec Zn = Z + (kStep * dZ / gap) * (Q - Z);
      const double dn = delta_of(Zn);
      if (dn < floor) break;
      pts.push_back(Zn);
      dl.push_back(dn);
      Z = Zn;
      dZ = dn;
    }
    // Straight walk dips toward Gamma: detour through a corkscrew over the midpoint.
    pts.resize(mark);
    dl.resize(mark);
    const Vec mid = 0.5 * (P + Q);
    const DistanceResult dm = distance(gamma, mid);
    const double scale = std::max({(P - Q).norm(), dP, dQ});
    const CorkscrewResult c = corkscrew(gamma, dm.foot, 2.0 * scale);
    connect(P, dP, c.point, c.delta, depth + 1);
    connect(c.point, c.delta, Q, dQ, depth + 1);
  }
};

std::vector<std::pair<Vec, double>> ascent(const BoundarySet& gamma, const Vec& X, double dX,
                                           double target) {
  std::vector<std::pair<Vec, double>> out;
  const DistanceResult foot = distance(gamma, X);
  double r = 2.0 * dX;
  for (int i = 0; i < 200; ++i) {
    const CorkscrewResult c = corkscrew(gamma, foot.foot, r);
    out.emplace_back(c.point, c.delta);
    if (r >= 2.0 * target) break;
    r *= 2.0;
  }
  return out;
}

}  // namespace

Chain harnack_chain(const BoundarySet& gamma, const Vec& X, const Vec& Y) {
  Chain chain;
  const double dX = distance(gamma, X).value;
  const double dY = distance(gamma, Y).value;
  if (!(dX > 0.0) || !(dY > 0.0)) throw Error(ErrorKind::Domain, "chain endpoints must lie off Gamma");
  const double L = (X - Y).norm();
  chain.lambda = L / std::min(dX, dY);
  ChainBuilder b{gamma, {X}, {dX}};
  if (L > 0.0) {
    if (chain.lambda <= 4.0) {
      b.connect(X, dX, Y, dY, 0);
    } else {
      auto up = ascent(gamma, X, dX, L);
      auto down = ascent(gamma, Y, dY, L);
      std::vector<std::pair<Vec, double>> path{{X, dX}};
      path.insert(path.end(), up.begin(), up.end());
      path.insert(path.end(), down.rbegin(), down.rend());
      path.emplace_back(Y, dY);
      for (std::size_t i = 0; i + 1 < path.size(); ++i)
        b.connect(path[i].first, path[i].second, path[i + 1].first, path[i + 1].second, 0);
    }
  }
  chain.points = std::move(b.pts);
  chain.deltas = std::move(b.dl);
  const double scale = L > 0.0 ? L : std::max(dX, 1e-300);
  chain.min_delta_over_r = kInf;
  chain.max_delta_over_r = 0.0;
  for (std::size_t i = 0; i < chain.points.size(); ++i) {
    chain.min_delta_over_r = std::min(chain.min_delta_over_r, chain.deltas[i] / scale);
    chain.max_delta_over_r = std::max(chain.max_delta_over_r, chain.deltas[i] / scale);
    if (i + 1 < chain.points.size())
      chain.ratios.push_back((chain.points[i + 1] - chain.points[i]).norm() / chain.deltas[i]);
  }
  return chain;
}

std::string check_chain(const Chain& chain, const Vec& X, const Vec& Y) {
  if (chain.points.empty()) return "empty chain";
  if (chain.points.front() != X) return "first point differs from X";
  if (chain.points.back() != Y) return "last point differs from Y";
  if (chain.ratios.size() + 1 != chain.points.size()) return "ratio count mismatch";
  for (std::size_t i = 0; i < chain.ratios.size(); ++i)
    if (!(chain.ratios[i] <= 0.5)) return "link " + std::to_string(i) + " exceeds ratio 1/2";
  return {};
}

}  // namespace lowdim
