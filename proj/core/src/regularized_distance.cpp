#include "lowdim/regularized_distance.hpp"

#include "lowdim/gauss.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <sstream>

namespace lowdim {

namespace {

/// Cheap lower bound for dist(X, Gamma), used for level selection.
double distance_lower_bound(const BoundarySet& gamma, const Vec& X) {
  if (gamma.is_plane()) return distance(gamma, X).value;
  if (gamma.is_graph()) {
    const int d = gamma.param_dim();
    const double lip = gamma.lipschitz();
    const Vec gap = X.tail(gamma.n() - d) - gamma.graph_function().value(X.head(d));
    return gap.norm() / std::sqrt(1.0 + lip * lip);
  }
  const DistanceResult r = distance(gamma, X, 10);
  return std::max(0.0, r.value - r.error);
}

}  // namespace

RegularizedDistance::RegularizedDistance(BoundarySet gamma, QuadratureRule rule, double alpha,
                                         bool tail_nodes)
    : gamma_(std::move(gamma)), rule_(std::move(rule)), alpha_(alpha) {
  if (!(alpha > 0.0)) throw Error(ErrorKind::Precondition, "alpha must be positive");
  if (rule_.n != gamma_.n()) throw Error(ErrorKind::Dimension, "rule and boundary dimensions differ");
  n_ = gamma_.n();
  p_ = gamma_.d() + alpha_;
  nodes_ = rule_.nodes;
  weights_ = rule_.weights;
  if (!gamma_.bounded()) {
    const int d = gamma_.param_dim();
    c0_ = unit_ball_volume(d) * std::pow(1.0 + gamma_.lipschitz() * gamma_.lipschitz(), 0.5 * d);
    if (d == 1 && tail_nodes) {
      build_tail();
    } else {
      interval_tail_ = true;
    }
  }
}

void RegularizedDistance::build_tail() {
  // Geometric Gauss panels outward from each window edge, then one mapped panel to infinity.
  const double a = rule_.window.lo[0], b = rule_.window.hi[0];
  const double width = b - a;
  const double h = width / std::ldexp(1.0, rule_.level);
  const double c = 0.5 * (a + b);
  const double far = 1e3 * width;
  const GaussRule& g8 = gauss_legendre(8);
  const GaussRule& g16 = gauss_legendre(16);
  const bool graph = gamma_.is_graph();
  auto push = [&](double x, double w) {
    Vec xv(1);
    xv[0] = x;
    const Vec p = gamma_.lift(xv);
    double jac = 1.0;
    if (graph) jac = std::sqrt(1.0 + gamma_.graph_function().jacobian(xv).squaredNorm());
    for (int k = 0; k < n_; ++k) nodes_.push_back(p[k]);
    weights_.push_back(w * jac);
  };
  for (int side = -1; side <= 1; side += 2) {
    const double edge = side > 0 ? b : a;
    double s = 0.0, w = 4.0 * h;
    while (s < far) {
      for (std::size_t q = 0; q < g8.x.size(); ++q) {
        const double off = s + 0.5 * w * (g8.x[q] + 1.0);
        push(edge + side * off, 0.5 * w * g8.w[q]);
      }
      s += w;
      w *= 2.0;
    }
    // x = c + side * L u^{-1/alpha}, u in (0, 1]; the kernel times dx/du is smooth in u.
    const double L = std::abs(edge + side * s - c);
    for (std::size_t q = 0; q < g16.x.size(); ++q) {
      const double u = 0.5 * (g16.x[q] + 1.0);
      const double x = c + side * L * std::pow(u, -1.0 / alpha_);
      const double dxdu = (L / alpha_) * std::pow(u, -1.0 / alpha_ - 1.0);
      push(x, 0.5 * g16.w[q] * dxdu);
    }
  }
}

double RegularizedDistance::relative_error(const Vec& X, double delta, double i0) const {
  double rel = 0.0;
  if (gamma_.bounded()) {
    const double q = rule_.covering_radius / std::max(delta, 1e-300);
    rel = q * q;
  } else {
    const int d = gamma_.param_dim();
    const double h = rule_.window.extent().maxCoeff() / std::ldexp(1.0, rule_.level);
    rel = 2.0 * std::exp(-2.0 * kPi * delta / (h * std::sqrt(1.0 + gamma_.lipschitz() * gamma_.lipschitz())));
    if (interval_tail_) {
      const double Rw = rule_.window.inner_margin(X.head(d));
      if (Rw <= 0.0) return kInf;
      rel += c0_ * std::pow(Rw, -alpha_) / (1.0 - std::pow(2.0, -alpha_)) / i0;
    }
  }
  return rel + 1e-15;
}

DAlphaJet RegularizedDistance::jet(const Vec& X, int order, bool check_accuracy) const {
  if (X.size() != n_) throw Error(ErrorKind::Dimension, "point dimension != n");
  if (order < 0 || order > 2) throw Error(ErrorKind::Precondition, "jet order must be 0, 1 or 2");
  DAlphaJet j;
  j.order = order;
  j.delta = distance_lower_bound(gamma_, X);
  if (check_accuracy && j.delta < 4.0 * rule_.covering_radius) {
    std::ostringstream os;
    os << "delta(X) = " << j.delta << " is below 4 h_L = " << 4.0 * rule_.covering_radius;
    throw Error(ErrorKind::Accuracy, os.str());
  }
  const std::size_t m = weights_.size();
  const double half_p = -0.5 * p_;
  const bool p_is_two = p_ == 2.0;
  const double lap_factor = -p_ * (n_ - p_ - 2.0);
  double i0 = 0.0, lap = 0.0;
  double g[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  double x[8];
  for (int k = 0; k < n_; ++k) x[k] = X[k];
  const double* y = nodes_.data();
  for (std::size_t i = 0; i < m; ++i, y += n_) {
    double z[8];
    double r2 = 0.0;
    for (int k = 0; k < n_; ++k) {
      z[k] = x[k] - y[k];
      r2 += z[k] * z[k];
    }
    if (r2 == 0.0) throw Error(ErrorKind::Domain, "evaluation point coincides with a quadrature node");
    const double kern = p_is_two ? 1.0 / r2 : std::pow(r2, half_p);
    const double s = weights_[i];
    i0 += s * kern;
    if (order >= 1) {
      const double k2 = s * kern / r2;
      for (int k = 0; k < n_; ++k) g[k] += k2 * z[k];
      lap += k2;
    }
  }
  j.i0 = i0;
  const double a = alpha_;
  j.value = std::pow(i0, -1.0 / a);
  j.gradient = Vec::Zero(n_);
  j.grad_i0 = Vec::Zero(n_);
  if (order >= 1) {
    for (int k = 0; k < n_; ++k) j.grad_i0[k] = -p_ * g[k];
    j.gradient = (-1.0 / a) * std::pow(i0, -1.0 / a - 1.0) * j.grad_i0;
  }
  if (order >= 2) {
    j.lap_i0 = lap_factor * lap;
    j.laplacian = (-1.0 / a) * (std::pow(i0, -1.0 / a - 1.0) * j.lap_i0 -
                                (1.0 / a + 1.0) * std::pow(i0, -1.0 / a - 2.0) * j.grad_i0.squaredNorm());
  }
  j.relative_error = relative_error(X, j.delta, i0);
  const double rel = j.relative_error;
  j.error_value = j.value * rel / a;
  j.error_gradient = j.gradient.norm() * rel * (1.0 + 1.0 / a);
  j.error_laplacian = std::abs(j.laplacian) * rel * (1.0 + 2.0 / a) +
                      (order >= 2 ? j.gradient.squaredNorm() / j.value * rel : 0.0);
  return j;
}

AdaptiveRegularizedDistance::AdaptiveRegularizedDistance(const BoundarySet& gamma, const Box& window,
                                                         double alpha, int min_level, int max_level) {
  if (min_level > max_level) throw Error(ErrorKind::Precondition, "min_level > max_level");
  for (int L = min_level; L <= max_level; ++L)
    levels_.push_back(std::make_shared<RegularizedDistance>(gamma, sigma_quadrature(gamma, L, window), alpha));
}

double AdaptiveRegularizedDistance::finest_covering_radius() const {
  return levels_.back()->covering_radius();
}

DAlphaJet AdaptiveRegularizedDistance::jet(const Vec& X, int order) const {
  const double dl = distance_lower_bound(boundary(), X);
  for (const auto& lv : levels_)
    if (4.0 * lv->covering_radius() <= dl) return lv->jet(X, order, false);
  return levels_.back()->jet(X, order, true);
}

DAlphaJet d_alpha_jet(const BoundarySet& gamma, const QuadratureRule& rule, double alpha,
                      const Vec& X, int order) {
  return RegularizedDistance(gamma, rule, alpha).jet(X, order);
}

MagicResidual magic_residual(const RegularizedDistance& rd, const Vec& X) {
  MagicResidual m;
  m.jet = rd.jet(X, 2);
  const double g2 = m.jet.gradient.squaredNorm();
  m.gradient_norm = std::sqrt(g2);
  const double scale = 1.0;  // |grad D| is dimensionless and O(1) for AR boundaries
  if (!(m.gradient_norm > 1e-12 * scale))
    throw Error(ErrorKind::Degenerate, "gradient of D_alpha is numerically zero");
  const BoundarySet& gamma = rd.boundary();
  const double k = gamma.d() + 1.0 - gamma.n();
  m.residual = std::abs(m.jet.value * m.jet.laplacian + k * g2) / g2;
  return m;
}

double flat_d_alpha_constant(int d, double alpha) {
  return std::pow(kPi, 0.5 * d) * std::tgamma(0.5 * alpha) / std::tgamma(0.5 * (d + alpha));
}

std::vector<Vec> sample_points_off_gamma(const BoundarySet& gamma, const QuadratureRule& rule,
                                         int samples, double min_delta, double max_delta,
                                         std::uint64_t seed) {
  if (!(min_delta > 0.0 && max_delta > min_delta))
    throw Error(ErrorKind::Precondition, "sampling needs 0 < min_delta < max_delta");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> nrm(0.0, 1.0);
  const int n = gamma.n();
  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(samples));
  int guard = 0;
  while (static_cast<int>(out.size()) < samples) {
    if (++guard > 1000 * samples + 1000) throw Error(ErrorKind::Domain, "could not sample points off Gamma");
    const double target = min_delta * std::pow(max_delta / min_delta, u01(rng));
    Vec X;
    if (gamma.is_cantor()) {
      std::uniform_int_distribution<std::size_t> pick(0, rule.size() - 1);
      Vec dir(n);
      for (int k = 0; k < n; ++k) dir[k] = nrm(rng);
      X = rule.node_vec(pick(rng)) + target * dir.normalized();
    } else {
      const int d = gamma.param_dim();
      Vec x(d);
      for (int k = 0; k < d; ++k)
        x[k] = rule.window.lo[k] + rule.window.extent()[k] * (0.25 + 0.5 * u01(rng));
      const Mat T = gamma.tangent_frame(x);
      Eigen::HouseholderQR<Mat> qr(T);
      const Mat Q = qr.householderQ() * Mat::Identity(n, n);
      Vec v(n - d);
      for (int k = 0; k < n - d; ++k) v[k] = nrm(rng);
      X = gamma.lift(x) + target * (Q.rightCols(n - d) * v.normalized());
    }
    const double dd = distance(gamma, X).value;
    if (dd < min_delta || dd > max_delta) continue;
    out.push_back(X);
  }
  return out;
}

ComparabilityScan comparability_scan(const RegularizedDistance& rd, int samples, std::uint64_t seed) {
  if (samples < 1) throw Error(ErrorKind::Precondition, "samples must be >= 1");
  const BoundarySet& gamma = rd.boundary();
  const QuadratureRule& rule = rd.rule();
  const double lo = 8.0 * rule.covering_radius;
  const double hi = gamma.bounded() ? gamma.diameter() : 0.25 * rule.window.extent().minCoeff();
  ComparabilityScan scan;
  for (const Vec& X : sample_points_off_gamma(gamma, rule, samples, lo, hi, seed)) {
    const double ratio = rd.value(X) / distance(gamma, X).value;
    scan.min_ratio = std::min(scan.min_ratio, ratio);
    scan.max_ratio = std::max(scan.max_ratio, ratio);
    ++scan.samples;
  }
  return scan;
}

// ---------------------------------------------------------------------------
// Jones beta numbers

BetaNumber beta_infinity(const GraphFunction& phi, const Vec& x, double r, int grid_per_axis) {
  const int d = phi.d;
  if (x.size() != d) throw Error(ErrorKind::Dimension, "beta center dimension != d");
  if (!(r > 0.0)) throw Error(ErrorKind::Precondition, "beta radius must be positive");
  int g = grid_per_axis;
  if (d >= 3) g = std::min(g, 17);
  std::vector<Vec> pts;
  std::size_t total = 1;
  for (int k = 0; k < d; ++k) total *= static_cast<std::size_t>(g);
  for (std::size_t c = 0; c < total; ++c) {
    std::size_t rem = c;
    Vec u(d);
    for (int k = 0; k < d; ++k) {
      u[k] = -1.0 + 2.0 * static_cast<double>(rem % g) / (g - 1);
      rem /= g;
    }
    if (u.squaredNorm() <= 1.0 + 1e-12) pts.push_back(u);
  }
  if (static_cast<int>(pts.size()) < d + 2) throw Error(ErrorKind::Precondition, "degenerate beta sample grid");
  const int K = static_cast<int>(pts.size());
  const int c = phi.codim;
  Mat P(K, d + 1), F(K, c);
  for (int k = 0; k < K; ++k) {
    P(k, 0) = 1.0;
    P.row(k).tail(d) = pts[k].transpose();
    F.row(k) = phi.value(x + r * pts[k]).transpose();
  }
  Vec w = Vec::Constant(K, 1.0 / K);
  double best = kInf;
  BetaNumber b;
  b.center = x;
  b.radius = r;
  for (int it = 0; it < 50; ++it) {
    const Vec sw = w.array().sqrt();
    const Mat A = sw.asDiagonal() * P;
    const Mat B = sw.asDiagonal() * F;
    const Mat theta = A.colPivHouseholderQr().solve(B);
    const Vec e = (F - P * theta).rowwise().norm();
    best = std::min(best, e.maxCoeff());
    b.iterations = it + 1;
    const double denom = w.dot(e);
    if (!(denom > 0.0)) break;
    w = w.cwiseProduct(e) / denom;
  }
  b.raw = best;
  b.value = best / r;
  return b;
}

BetaCarleson beta_carleson(const GraphFunction& phi, const Box& region, int dyadic_levels) {
  const int d = phi.d;
  if (region.dim() != d) throw Error(ErrorKind::Dimension, "region must be a box in R^d");
  if (dyadic_levels < 1) throw Error(ErrorKind::Precondition, "dyadic_levels must be >= 1");
  BetaCarleson out;
  out.outside_claim = d != 1;
  const double side0 = region.extent()[0];
  // Per level, cubes in lexicographic order; sums accumulated bottom-up.
  std::vector<std::vector<double>> contrib(dyadic_levels);
  std::vector<std::vector<Vec>> centers(dyadic_levels);
  for (int k = 0; k < dyadic_levels; ++k) {
    const std::size_t per = std::size_t{1} << k;
    std::size_t count = 1;
    for (int i = 0; i < d; ++i) count *= per;
    const Vec side = region.extent() / static_cast<double>(per);
    for (std::size_t c = 0; c < count; ++c) {
      std::size_t rem = c;
      Vec ctr(d);
      for (int i = d - 1; i >= 0; --i) {
        ctr[i] = region.lo[i] + side[i] * (static_cast<double>(rem % per) + 0.5);
        rem /= per;
      }
      const double len = side0 / static_cast<double>(per);
      BetaNumber b = beta_infinity(phi, ctr, len);
      contrib[k].push_back(b.value * b.value * std::pow(len, d));
      centers[k].push_back(ctr);
      out.betas.push_back(std::move(b));
    }
  }
  std::vector<double> sums = contrib[dyadic_levels - 1];
  for (int k = dyadic_levels - 1; k >= 0; --k) {
    const std::size_t per = std::size_t{1} << k;
    const double len = side0 / static_cast<double>(per);
    for (std::size_t c = 0; c < sums.size(); ++c) out.report.add(centers[k][c], len, sums[c] / std::pow(len, d));
    if (k == 0) break;
    // Parent index: halve each coordinate index.
    const std::size_t pper = per / 2;
    std::size_t pcount = 1;
    for (int i = 0; i < d; ++i) pcount *= pper;
    std::vector<double> parent = contrib[k - 1];
    for (std::size_t c = 0; c < sums.size(); ++c) {
      std::size_t rem = c, pidx = 0, mult = 1;
      std::vector<std::size_t> idx(d);
      for (int i = d - 1; i >= 0; --i) {
        idx[i] = rem % per;
        rem /= per;
      }
      for (int i = d - 1; i >= 0; --i) {
        pidx += (idx[i] / 2) * mult;
        mult *= pper;
      }
      parent[pidx] += sums[c];
    }
    (void)pcount;
    sums.swap(parent);
  }
  out.report.resolution = dyadic_levels;
  return out;
}

}  // namespace lowdim
