#include "lowdim/operator_fields.hpp"

#include "lowdim/gauss.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lowdim {

Mat MatrixField::operator()(const Vec& X) const {
  if (scalar) return scalar(X) * Mat::Identity(n, n);
  return matrix(X);
}

Mat MatrixField::reduced(const Vec& X) const {
  const double w = weight ? weight(X) : 1.0;
  return (*this)(X) / w;
}

double model_weight(int d, const Vec& X) {
  const int n = static_cast<int>(X.size());
  const double t = X.tail(n - d).norm();
  if (t == 0.0) return kInf;
  return std::pow(t, d + 1.0 - n);
}

MatrixField constant_field(const Mat& A) {
  MatrixField f;
  f.n = static_cast<int>(A.rows());
  f.matrix = [A](const Vec&) -> Mat { return A; };
  f.weight = [](const Vec&) { return 1.0; };
  f.smoothness = 99;
  f.symmetric = (A - A.transpose()).norm() == 0.0;
  f.description = "constant";
  if (A.isApprox(A(0, 0) * Mat::Identity(A.rows(), A.cols()), 0.0)) {
    const double a = A(0, 0);
    f.scalar = [a](const Vec&) { return a; };
  }
  return f;
}

MatrixField model_field(int d, int n) {
  MatrixField f;
  f.n = n;
  f.scalar = [d](const Vec& X) { return model_weight(d, X); };
  f.weight = f.scalar;
  f.smoothness = 99;
  f.description = "model L0 (d=" + std::to_string(d) + ",n=" + std::to_string(n) + ")";
  return f;
}

ScalarField weight_w(const BoundarySet& gamma, WeightMode mode,
                     std::shared_ptr<const AdaptiveRegularizedDistance> rd) {
  ScalarField w;
  w.n = gamma.n();
  const double e = gamma.d() + 1.0 - gamma.n();
  if (mode == WeightMode::Euclidean) {
    if (gamma.is_plane()) {
      const int d = gamma.param_dim();
      w.value = [d](const Vec& X) { return model_weight(d, X); };
    } else {
      w.value = [gamma, e](const Vec& X) {
        const double dd = distance(gamma, X).value;
        return dd == 0.0 ? kInf : std::pow(dd, e);
      };
    }
    w.description = "euclidean";
    return w;
  }
  if (!rd) throw Error(ErrorKind::Precondition, "d_alpha weight needs a regularized-distance evaluator");
  w.value = [rd, e](const Vec& X) {
    try {
      return std::pow(rd->value(X), e);
    } catch (const Error& err) {
      if (err.kind() == ErrorKind::Domain) return kInf;
      throw;
    }
  };
  w.gradient = [rd, e](const Vec& X) -> Vec {
    const DAlphaJet j = rd->jet(X, 1);
    return e * std::pow(j.value, e - 1.0) * j.gradient;
  };
  w.description = "d_alpha(alpha=" + std::to_string(rd->alpha()) + ")";
  return w;
}

// ---------------------------------------------------------------------------
// m(B(X, r))

namespace {

struct BallIntegrator {
  const BoundarySet& gamma;
  const ScalarField& w;
  Vec X;
  double r;
  int max_depth;
  std::size_t budget;
  std::size_t cells = 0;
  const GaussRule& g2 = gauss_legendre(2);
  const GaussRule& g3 = gauss_legendre(3);

  double tensor(const Vec& c, double s, const GaussRule& g, bool clip) const {
    const int n = static_cast<int>(c.size());
    const int q = static_cast<int>(g.x.size());
    std::size_t total = 1;
    for (int k = 0; k < n; ++k) total *= static_cast<std::size_t>(q);
    double acc = 0.0;
    Vec P(n);
    for (std::size_t idx = 0; idx < total; ++idx) {
      std::size_t rem = idx;
      double wt = 1.0;
      for (int k = 0; k < n; ++k) {
        const int i = static_cast<int>(rem % q);
        rem /= q;
        P[k] = c[k] + s * g.x[i];
        wt *= s * g.w[i];
      }
      if (clip && (P - X).squaredNorm() > r * r) continue;
      const double v = w(P);
      if (!std::isfinite(v)) throw Error(ErrorKind::Domain, "weight is infinite at a quadrature point");
      acc += wt * v;
    }
    return acc;
  }

  double cell(const Vec& c, double s, int depth) {
    if (++cells > budget) throw Error(ErrorKind::Budget, "measure_m_ball cell budget exceeded");
    const int n = static_cast<int>(c.size());
    // Nearest and farthest points of the cube from X.
    double near2 = 0.0, far2 = 0.0;
    for (int k = 0; k < n; ++k) {
      const double lo = c[k] - s - X[k], hi = c[k] + s - X[k];
      const double nk = (lo > 0) ? lo : (hi < 0 ? -hi : 0.0);
      const double fk = std::max(std::abs(lo), std::abs(hi));
      near2 += nk * nk;
      far2 += fk * fk;
    }
    if (near2 >= r * r) return 0.0;
    const bool inside = far2 <= r * r;
    const double rho = s * std::sqrt(static_cast<double>(n));
    const double dg = distance(gamma, c).value;
    if (inside && dg > 2.0 * rho) return tensor(c, s, g3, false);
    if (depth >= max_depth) return tensor(c, s, g2, !inside);
    double acc = 0.0;
    const std::size_t kids = std::size_t{1} << n;
    Vec cc(n);
    for (std::size_t m = 0; m < kids; ++m) {
      for (int k = 0; k < n; ++k) cc[k] = c[k] + ((m >> k) & 1 ? 0.5 : -0.5) * s;
      acc += cell(cc, 0.5 * s, depth + 1);
    }
    return acc;
  }
};

}  // namespace

MeasureBall measure_m_ball(const BoundarySet& gamma, const ScalarField& w, const Vec& X, double r,
                           int resolution, std::size_t cell_budget) {
  if (!(r > 0.0)) throw Error(ErrorKind::Precondition, "ball radius must be positive");
  if (resolution < 2) throw Error(ErrorKind::Precondition, "resolution must be >= 2");
  BallIntegrator fine{gamma, w, X, r, resolution, cell_budget};
  BallIntegrator coarse{gamma, w, X, r, resolution - 1, cell_budget};
  const double If = fine.cell(X, r, 0);
  const double Ic = coarse.cell(X, r, 0);
  MeasureBall out;
  out.value = 2.0 * If - Ic;
  out.error = std::abs(If - Ic);
  out.cells = fine.cells + coarse.cells;
  return out;
}

// ---------------------------------------------------------------------------
// L_alpha

namespace {

LAlphaField make_l_alpha(const BoundarySet& gamma, std::function<double(const Vec&)> dval,
                         const std::string& desc, const std::vector<Vec>& scan_points) {
  const double e = gamma.d() + 1.0 - gamma.n();
  LAlphaField out;
  out.field.n = gamma.n();
  out.field.scalar = [dval, e](const Vec& X) {
    const double D = dval(X);
    return D > 0.0 ? std::pow(D, e) : kInf;
  };
  out.field.weight = [gamma, e](const Vec& X) {
    const double dd = distance(gamma, X).value;
    return dd > 0.0 ? std::pow(dd, e) : kInf;
  };
  out.field.smoothness = 2;
  out.field.description = desc;
  for (const Vec& X : scan_points) {
    const double ratio = dval(X) / distance(gamma, X).value;
    out.scan.min_ratio = std::min(out.scan.min_ratio, ratio);
    out.scan.max_ratio = std::max(out.scan.max_ratio, ratio);
    ++out.scan.samples;
  }
  if (out.scan.samples > 0)
    out.c3 = std::pow(out.scan.max_ratio / out.scan.min_ratio, gamma.n() - gamma.d() - 1.0);
  return out;
}

}  // namespace

LAlphaField build_L_alpha(std::shared_ptr<const AdaptiveRegularizedDistance> rd,
                          const QuadratureRule& scan_rule, int scan_samples, std::uint64_t seed) {
  const BoundarySet& gamma = rd->boundary();
  const double lo = 8.0 * rd->finest_covering_radius();
  const double hi = gamma.bounded() ? gamma.diameter() : 0.25 * scan_rule.window.extent().minCoeff();
  std::vector<Vec> pts;
  if (scan_samples > 0) pts = sample_points_off_gamma(gamma, scan_rule, scan_samples, lo, hi, seed);
  std::ostringstream os;
  os << "L_alpha(alpha=" << rd->alpha() << ")";
  auto field = make_l_alpha(gamma, [rd](const Vec& X) { return rd->value(X); }, os.str(), pts);
  return field;
}

LAlphaField build_L_alpha(const BoundarySet& gamma, const QuadratureRule& rule, double alpha) {
  auto rd = std::make_shared<RegularizedDistance>(gamma, rule, alpha);
  const double lo = 8.0 * rule.covering_radius;
  const double hi = gamma.bounded() ? gamma.diameter() : 0.25 * rule.window.extent().minCoeff();
  auto pts = sample_points_off_gamma(gamma, rule, 64, lo, hi, 1);
  std::ostringstream os;
  os << "L_alpha(alpha=" << alpha << ")";
  return make_l_alpha(gamma, [rd](const Vec& X) { return rd->jet(X, 0, false).value; }, os.str(), pts);
}

// ---------------------------------------------------------------------------
// Codimension-one lift

HalfSpaceField constant_half_space_field(const Mat& A) {
  HalfSpaceField f;
  f.d = static_cast<int>(A.rows()) - 1;
  f.matrix = [A](const Vec&, double) -> Mat { return A; };
  f.description = "constant";
  return f;
}

MatrixField lift_codim1(const HalfSpaceField& a1, int n) {
  const int d = a1.d;
  if (n - d < 2) throw Error(ErrorKind::Dimension, "lift needs n - d >= 2");
  MatrixField f;
  f.n = n;
  f.matrix = [a1, d, n](const Vec& X) -> Mat {
    const Vec t = X.tail(n - d);
    const double s = t.norm();
    if (s == 0.0) return Mat::Constant(n, n, kInf);
    const Vec th = t / s;
    const Mat A1 = a1.matrix(X.head(d), s);
    Mat A = Mat::Zero(n, n);
    A.topLeftCorner(d, d) = A1.topLeftCorner(d, d);
    A.topRightCorner(d, n - d) = A1.col(d).head(d) * th.transpose();
    A.bottomLeftCorner(n - d, d) = th * A1.row(d).head(d);
    A.bottomRightCorner(n - d, n - d) = A1(d, d) * Mat::Identity(n - d, n - d);
    return std::pow(s, d + 1.0 - n) * A;
  };
  f.weight = [d](const Vec& X) { return model_weight(d, X); };
  f.smoothness = 1;
  const Mat probe = a1.matrix(Vec::Zero(d), 1.0);
  f.symmetric = (probe - probe.transpose()).norm() == 0.0;
  f.description = "lift(" + a1.description + ")";
  return f;
}

// ---------------------------------------------------------------------------
// Ellipticity

PointSampler box_sampler(const BoundarySet& gamma, const Box& box, double min_delta) {
  return [gamma, box, min_delta](std::mt19937_64& rng) -> Vec {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int tries = 0; tries < 100000; ++tries) {
      Vec X(box.dim());
      for (int k = 0; k < box.dim(); ++k) X[k] = box.lo[k] + box.extent()[k] * u01(rng);
      if (distance(gamma, X).value >= min_delta) return X;
    }
    throw Error(ErrorKind::Domain, "box sampler found no point off Gamma");
  };
}

EllipticityReport ellipticity_constants(const MatrixField& A, const PointSampler& sampler,
                                        int samples, std::uint64_t seed) {
  if (samples < 1) throw Error(ErrorKind::Precondition, "samples must be >= 1");
  std::mt19937_64 rng(seed);
  EllipticityReport rep;
  for (int s = 0; s < samples; ++s) {
    const Vec X = sampler(rng);
    const Mat R = A.reduced(X);
    if (!R.allFinite()) throw Error(ErrorKind::Domain, "reduced matrix not finite at a sample point");
    const double up = Eigen::JacobiSVD<Mat>(R).singularValues()(0);
    const Mat S = 0.5 * (R + R.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(S);
    const double lmin = es.eigenvalues()(0);
    if (!(lmin > 0.0)) {
      std::ostringstream os;
      os << "A xi . xi <= 0 at X = (" << X.transpose() << "), xi = ("
         << es.eigenvectors().col(0).transpose() << ")";
      throw Error(ErrorKind::NonElliptic, os.str());
    }
    const double c = std::max(up, 1.0 / lmin);
    rep.upper = std::max(rep.upper, up);
    rep.lower_inv = std::max(rep.lower_inv, 1.0 / lmin);
    if (c > rep.c3) {
      rep.c3 = c;
      rep.worst_X = X;
    }
    ++rep.samples;
  }
  return rep;
}

}  // namespace lowdim
