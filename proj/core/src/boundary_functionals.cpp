#include "lowdim/boundary_functionals.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace lowdim {

bool Cutoff::operator()(const Vec& x, double s) const {
  if (s > ell) return false;
  if (center && (x - *center).norm() > radius) return false;
  if (e && e(x) > s) return false;
  return true;
}

Cutoff Cutoff::doubled() const {
  Cutoff c = *this;
  c.ell = 2.0 * ell;
  c.radius = 2.0 * radius;
  if (e) {
    auto f = e;
    c.e = [f](const Vec& x) { return 0.5 * f(x); };
  }
  return c;
}

Cutoff Cutoff::local(double ell, const Vec& center, double radius, std::function<double(const Vec&)> e) {
  Cutoff c;
  c.ell = ell;
  c.center = center;
  c.radius = radius;
  c.e = std::move(e);
  return c;
}

std::function<double(const Vec&)> sawtooth(const std::vector<Vec>& points, double scale) {
  if (scale < 0.0 || scale > 1.0) throw Error(ErrorKind::Precondition, "saw-tooth scale must lie in [0, 1]");
  return [points, scale](const Vec& x) {
    double m = kInf;
    for (const auto& p : points) m = std::min(m, (x - p).norm());
    return scale * m;
  };
}

std::function<double(const Vec&)> random_sawtooth(const Vec& center, double radius, int count, double scale,
                                                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec> pts;
  while (static_cast<int>(pts.size()) < count) {
    Vec p(center.size());
    for (int k = 0; k < p.size(); ++k) p[k] = u(rng);
    if (p.norm() <= 1.0) pts.push_back(center + radius * p);
  }
  return sawtooth(pts, scale);
}

BoundaryPoints boundary_lattice(const Vec& center, double radius, double h) {
  const int d = static_cast<int>(center.size());
  const int m = static_cast<int>(std::ceil(radius / h));
  BoundaryPoints b;
  b.weight = std::pow(h, d);
  std::vector<int> idx(static_cast<std::size_t>(d), -m);
  while (true) {
    Vec p(d);
    for (int k = 0; k < d; ++k) p[k] = center[k] + (idx[static_cast<std::size_t>(k)] + 0.5) * h;
    if ((p - center).norm() <= radius) b.points.push_back(p);
    int k = d - 1;
    while (k >= 0 && ++idx[static_cast<std::size_t>(k)] >= m) idx[static_cast<std::size_t>(k--)] = -m;
    if (k < 0) break;
  }
  return b;
}

double ConeFunctional::lp_norm(double q) const {
  double s = 0.0;
  for (double v : values) s += std::pow(std::abs(v), q) * weight;
  return std::pow(s, 1.0 / q);
}

namespace {

void require_flat(const Grid& g) {
  if (!g.boundary().is_plane())
    throw Error(ErrorKind::Precondition, "boundary functionals are defined for flat Gamma = R^d x {0}");
}

double cone_slope(double aperture) {
  if (aperture < 1.0) throw Error(ErrorKind::Precondition, "cone aperture must be at least 1");
  return std::sqrt(aperture * aperture - 1.0);
}

// |grad u|^2 |u|^{p-2}, zero where the gradient vanishes.
double p_density(double g2, double v, double p, double kappa) {
  if (g2 == 0.0) return 0.0;
  if (p == 2.0) return g2;
  const double a = std::abs(v);
  return g2 * std::pow(p < 2.0 ? a + kappa : a, p - 2.0);
}

}  // namespace

CellTable::CellTable(const SolutionField& u) : u_(u) {
  const Grid& g = u.grid();
  require_flat(g);
  n_ = g.dim();
  d_ = g.boundary().param_dim();
  for (double v : u.values()) scale_ = std::max(scale_, std::abs(v));
  if (scale_ == 0.0) scale_ = 1.0;

  std::vector<int> lo(static_cast<std::size_t>(n_), 0);
  std::vector<int> last(static_cast<std::size_t>(n_));
  for (int k = 0; k < n_; ++k) last[static_cast<std::size_t>(k)] = static_cast<int>(g.axis(k).size()) - 2;
  const unsigned corners = 1U << n_;
  const double half = 1.0 / static_cast<double>(corners / 2);
  while (true) {
    Vec c(n_), w(n_);
    std::size_t base = 0;
    for (int k = 0; k < n_; ++k) {
      const auto& a = g.axis(k);
      const int i = lo[static_cast<std::size_t>(k)];
      c[k] = 0.5 * (a[i] + a[i + 1]);
      w[k] = a[i + 1] - a[i];
      base += static_cast<std::size_t>(i) * g.stride(k);
    }
    double v = 0.0;
    Vec grad = Vec::Zero(n_);
    for (unsigned m = 0; m < corners; ++m) {
      std::size_t node = base;
      for (int k = 0; k < n_; ++k)
        if ((m >> k) & 1U) node += g.stride(k);
      const double val = u.value(node) / scale_;
      v += val;
      for (int k = 0; k < n_; ++k) grad[k] += ((m >> k) & 1U) ? val : -val;
    }
    for (int k = 0; k < n_; ++k) grad[k] *= half / w[k];
    for (int k = 0; k < n_; ++k) c_.push_back(c[k]);
    s_.push_back(c.tail(n_ - d_).norm());
    v_.push_back(v / corners);
    g2_.push_back(grad.squaredNorm());
    grad_.push_back(grad);
    vol_.push_back(w.prod());
    radius_ = std::max(radius_, 0.5 * w.norm());

    int k = n_ - 1;
    while (k >= 0 && ++lo[static_cast<std::size_t>(k)] > last[static_cast<std::size_t>(k)])
      lo[static_cast<std::size_t>(k--)] = 0;
    if (k < 0) break;
  }
}

ConeFunctional nontangential_max(const SolutionField& u, const BoundaryPoints& xs, const Cutoff& chi,
                                 const FunctionalOptions& opts) {
  const Grid& g = u.grid();
  require_flat(g);
  const int n = g.dim(), d = g.boundary().param_dim();
  const double slope = cone_slope(opts.aperture);
  std::vector<Vec> y;
  std::vector<double> s, a;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec X = g.point(i);
    const double si = X.tail(n - d).norm();
    if (si == 0.0 || !chi(X.head(d), si)) continue;
    y.push_back(X.head(d));
    s.push_back(si);
    a.push_back(std::abs(u.value(i)));
  }
  ConeFunctional f;
  f.points = xs.points;
  f.weight = xs.weight;
  f.aperture = opts.aperture;
  for (const Vec& x : xs.points) {
    double m = 0.0;
    bool hit = false;
    for (std::size_t j = 0; j < y.size(); ++j) {
      if ((y[j] - x).norm() <= slope * s[j]) {
        hit = true;
        m = std::max(m, a[j]);
      }
    }
    f.values.push_back(m);
    f.empty.push_back(hit ? 0 : 1);
  }
  return f;
}

ConeFunctional square_function(const CellTable& cells, double p, const BoundaryPoints& xs, const Cutoff& chi,
                               const FunctionalOptions& opts) {
  if (!(p > 1.0)) throw Error(ErrorKind::Precondition, "square function needs p > 1");
  const int n = cells.n();
  const double slope = cone_slope(opts.aperture);
  const double kappa = opts.kappa_rel;
  std::vector<std::size_t> idx;
  std::vector<double> term, term10;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const double s = cells.s(c);
    if (!chi(cells.x(c), s)) continue;
    const double k = std::pow(s, 2.0 - n) * cells.volume(c);
    idx.push_back(c);
    term.push_back(p_density(cells.grad2(c), cells.value(c), p, kappa) * k);
    term10.push_back(p < 2.0 ? p_density(cells.grad2(c), cells.value(c), p, 10.0 * kappa) * k : 0.0);
  }
  ConeFunctional f;
  f.points = xs.points;
  f.weight = xs.weight;
  f.aperture = opts.aperture;
  f.p = p;
  for (const Vec& x : xs.points) {
    double sum = 0.0, sum10 = 0.0;
    bool hit = false;
    for (std::size_t j = 0; j < idx.size(); ++j) {
      const std::size_t c = idx[j];
      if ((cells.x(c) - x).norm() <= slope * cells.s(c)) {
        hit = true;
        sum += term[j];
        sum10 += term10[j];
      }
    }
    const double v = std::pow(sum, 1.0 / p);
    f.values.push_back(cells.scale() * v);
    f.empty.push_back(hit ? 0 : 1);
    if (p < 2.0 && v > 0.0) f.kappa_sensitivity = std::max(f.kappa_sensitivity, std::abs(std::pow(sum10, 1.0 / p) - v) / v);
  }
  return f;
}

double wp_norm(const CellTable& cells, double p, const FunctionalOptions& opts) {
  if (!(p > 1.0)) throw Error(ErrorKind::Precondition, "W^p norm needs p > 1");
  const double e = cells.d() + 1.0 - cells.n();
  double sum = 0.0;
  for (std::size_t c = 0; c < cells.size(); ++c)
    sum += p_density(cells.grad2(c), cells.value(c), p, opts.kappa_rel) * std::pow(cells.s(c), e) * cells.volume(c);
  return cells.scale() * std::pow(sum, 1.0 / p);
}

void write_check_csv(const std::vector<CheckRecord>& records, const std::string& config_hash, std::ostream& out) {
  out << "check_id,lhs,rhs,ratio,config_hash\n" << std::setprecision(17);
  for (const auto& r : records) out << r.id << ',' << r.lhs << ',' << r.rhs << ',' << r.ratio << ',' << config_hash << '\n';
}

void write_functional_csv(const ConeFunctional& f, std::ostream& out) {
  const int d = f.points.empty() ? 1 : static_cast<int>(f.points.front().size());
  for (int k = 0; k < d; ++k) out << 'x' << (k + 1) << ',';
  out << "value\n" << std::setprecision(17);
  for (std::size_t i = 0; i < f.points.size(); ++i) {
    for (int k = 0; k < d; ++k) out << f.points[i][k] << ',';
    out << f.values[i] << '\n';
  }
}

void RatioSummary::add(CheckRecord r) {
  if (r.rhs == 0.0) {
    ++skipped;
    return;
  }
  r.ratio = r.lhs / r.rhs;
  max_ratio = std::max(max_ratio, r.ratio);
  min_ratio = std::min(min_ratio, r.ratio);
  records.push_back(std::move(r));
}

RatioSummary poincare_check(const std::vector<SolutionField>& bank, const Vec& x, double r) {
  RatioSummary out;
  for (std::size_t b = 0; b < bank.size(); ++b) {
    const CellTable cells(bank[b]);
    const int d = cells.d();
    const double e = d + 1.0 - cells.n();
    double num = 0.0, den = 0.0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const double s = cells.s(c);
      if ((cells.x(c) - x).squaredNorm() + s * s > r * r) continue;
      const double m = std::pow(s, e) * cells.volume(c);
      num += cells.value(c) * cells.value(c) * m;
      den += cells.grad2(c) * m;
    }
    const double sc = cells.scale() * cells.scale();
    out.add({"poincare_" + std::to_string(b), sc * num, sc * r * r * den, 0.0});
  }
  return out;
}

std::vector<SolutionField> poincare_bank(std::shared_ptr<const Grid> grid, double r, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int n = grid->dim();
  std::vector<SolutionField> bank;
  const BoundarySet& gamma = grid->boundary();
  for (int i = 0; i < count; ++i) {
    Vec k(n);
    for (int j = 0; j < n; ++j) k[j] = 3.0 * u(rng) / r;
    const double phase = kPi * u(rng);
    const double amp = 0.45 * (1.0 + u(rng));
    bank.push_back(sample_field(grid, [&gamma, k, phase, amp, r](const Vec& X) {
      const double tau = delta(gamma, X) / r;
      return tau / std::sqrt(1.0 + tau * tau) * (1.0 + amp * std::sin(k.dot(X) + phase));
    }));
  }
  return bank;
}

OscillationFit oscillation_decay(const SolutionField& u, const Vec& x, const std::vector<double>& radii) {
  const Grid& g = u.grid();
  require_flat(g);
  const int d = g.boundary().param_dim(), n = g.dim();
  OscillationFit fit;
  fit.radii = radii;
  std::sort(fit.radii.begin(), fit.radii.end());
  for (double s : fit.radii) {
    double lo = kInf, hi = -kInf;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Vec X = g.point(i);
      if ((X.head(d) - x).squaredNorm() + X.tail(n - d).squaredNorm() > s * s) continue;
      lo = std::min(lo, u.value(i));
      hi = std::max(hi, u.value(i));
    }
    fit.oscillation.push_back(hi >= lo ? hi - lo : 0.0);
  }
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < fit.radii.size(); ++i) {
    if (fit.oscillation[i] <= 0.0) continue;
    lx.push_back(std::log(fit.radii[i]));
    ly.push_back(std::log(fit.oscillation[i]));
  }
  if (lx.size() < 2) {
    fit.skipped = true;
    return fit;
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  fit.exponent = sxy / sxx;
  return fit;
}

RatioSummary p_ellipticity_check(const MatrixField& A, const std::vector<SolutionField>& bank,
                                 const std::vector<Cutoff>& cutoffs, double p, const FunctionalOptions& opts) {
  if (!(p > 1.0)) throw Error(ErrorKind::Precondition, "p-ellipticity needs p > 1");
  RatioSummary out;
  const Grid* cached = nullptr;
  std::vector<Mat> coeff;
  for (std::size_t b = 0; b < bank.size(); ++b) {
    const CellTable cells(bank[b]);
    const double e = cells.d() + 1.0 - cells.n();
    if (cached != &bank[b].grid()) {
      cached = &bank[b].grid();
      coeff.clear();
      for (std::size_t c = 0; c < cells.size(); ++c) {
        const Vec X = cells.center(c);
        coeff.push_back(A.is_scalar() ? Mat(A.scalar(X) * Mat::Identity(X.size(), X.size())) : A(X));
      }
    }
    for (std::size_t k = 0; k < cutoffs.size(); ++k) {
      double lhs = 0.0, rhs = 0.0;
      for (std::size_t c = 0; c < cells.size(); ++c) {
        if (!cutoffs[k](cells.x(c), cells.s(c))) continue;
        const double rho = p_density(cells.grad2(c), cells.value(c), p, opts.kappa_rel);
        if (rho == 0.0) continue;
        const Vec& gr = cells.gradient(c);
        const double factor = rho / cells.grad2(c);  // |u|^{p-2}
        lhs += (p - 1.0) * factor * gr.dot(coeff[c] * gr) * cells.volume(c);
        rhs += rho * std::pow(cells.s(c), e) * cells.volume(c);
      }
      const double sc = std::pow(cells.scale(), p);
      out.add({"p_ellipticity_" + std::to_string(b) + "_" + std::to_string(k), sc * lhs, sc * rhs, 0.0});
    }
  }
  return out;
}

RatioSummary caccioppoli_check(const CellTable& cells, double p, const std::vector<InteriorBall>& balls,
                               const FunctionalOptions& opts) {
  if (!(p > 1.0)) throw Error(ErrorKind::Precondition, "Caccioppoli check needs p > 1");
  const int d = cells.d(), n = cells.n();
  const double e = d + 1.0 - n;
  const Box box = cells.field().grid().box();
  RatioSummary out;
  for (std::size_t b = 0; b < balls.size(); ++b) {
    const Vec& X = balls[b].center;
    const double r = balls[b].radius;
    if (X.tail(n - d).norm() <= 2.0 * r || box.inner_margin(X) < 2.0 * r)
      throw Error(ErrorKind::Precondition, "Caccioppoli balls need 2B inside Omega and the solve box");
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const double dist2 = (cells.center(c) - X).squaredNorm();
      if (dist2 > 4.0 * r * r) continue;
      const double m = std::pow(cells.s(c), e) * cells.volume(c);
      rhs += std::pow(std::abs(cells.value(c)), p) * m;
      if (dist2 <= r * r) lhs += p_density(cells.grad2(c), cells.value(c), p, opts.kappa_rel) * m;
    }
    const double sc = std::pow(cells.scale(), p);
    out.add({"caccioppoli_" + std::to_string(b), sc * lhs, sc * rhs / (r * r), 0.0});
  }
  return out;
}

NSBounds ns_bounds_check(const CellTable& cells, double p, double q, double ell, const Vec& xB, double rB,
                         const std::function<double(const Vec&)>& e, double h, const FunctionalOptions& opts) {
  if (rB < ell) throw Error(ErrorKind::Precondition, "N/S bounds need a ball radius of at least ell");
  const Cutoff chi1 = Cutoff::local(ell, xB, rB, e);
  const Cutoff chi2 = chi1.doubled();
  const BoundaryPoints xs = boundary_lattice(xB, 2.0 * rB + 2.0 * ell, h);
  NSBounds r;
  r.s1 = square_function(cells, q, xs, chi1, opts).lp_norm(p);
  r.s2 = square_function(cells, q, xs, chi2, opts).lp_norm(p);
  r.n1 = nontangential_max(cells.field(), xs, chi1, opts).lp_norm(p);
  r.n2 = nontangential_max(cells.field(), xs, chi2, opts).lp_norm(p);
  const int n = cells.n(), d = cells.d();
  Vec X = Vec::Zero(n);
  X.head(d) = xB;
  X[n - 1] = ell;
  r.anchor = std::pow(ell, d) * std::abs(cells.field().at(X));
  r.s_over_n = r.n2 > 0.0 ? r.s1 / r.n2 : 0.0;
  const double den = r.s2 + r.anchor;
  r.n_over_s = den > 0.0 ? r.n1 / den : 0.0;
  return r;
}

double carleson_energy(const CellTable& cells, const Vec& x, double r) {
  const int d = cells.d(), n = cells.n();
  const double e = d - n + 2.0;
  double sum = 0.0;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const double s = cells.s(c);
    if ((cells.x(c) - x).squaredNorm() + s * s > r * r) continue;
    sum += cells.grad2(c) * std::pow(s, e) * cells.volume(c);
  }
  const double ball = std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d + 1.0) * std::pow(r, d);
  return cells.scale() * cells.scale() * sum / ball;
}

double bmo_norm(const std::function<double(const Vec&)>& f, const std::vector<std::pair<Vec, double>>& balls,
                int m) {
  double best = 0.0;
  for (const auto& [c, r] : balls) {
    const int d = static_cast<int>(c.size());
    const double h = 2.0 * r / m;
    const BoundaryPoints pts = boundary_lattice(c, r, h);
    double s = 0.0, s2 = 0.0;
    for (const Vec& y : pts.points) {
      const double v = f(y);
      s += v;
      s2 += v * v;
    }
    const double k = static_cast<double>(pts.points.size());
    if (k == 0.0 || d == 0) continue;
    const double mean = s / k;
    best = std::max(best, std::sqrt(std::max(0.0, s2 / k - mean * mean)));
  }
  return best;
}

}  // namespace lowdim
