#include "lowdim/operator_fields.hpp"

#include "lowdim/gauss.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace lowdim {

double mollifier(const Vec& u) {
  double v = 1.0;
  for (int k = 0; k < u.size(); ++k) {
    const double a = 1.0 - u[k] * u[k];
    if (a <= 0.0) return 0.0;
    v *= (15.0 / 16.0) * a * a;
  }
  return v;
}

double mollifier_gradient_l1(int d) {
  // int |eta'| over [-1, 1] = 2 eta(0) = 15/8 per axis; the other factors have unit mass.
  return d * 15.0 / 8.0;
}

MollifiedGraph mollify(const GraphFunction& phi, const Vec& x, double r) {
  const int d = phi.d;
  MollifiedGraph m;
  if (r == 0.0) {
    m.value = phi.value(x);
    m.jacobian = phi.jacobian(x);
    m.dr = Vec::Zero(phi.codim);
    return m;
  }
  const GaussRule& g = gauss_legendre(8);
  const int q = static_cast<int>(g.x.size());
  std::size_t total = 1;
  for (int k = 0; k < d; ++k) total *= static_cast<std::size_t>(q);
  m.value = Vec::Zero(phi.codim);
  m.jacobian = Mat::Zero(phi.codim, d);
  m.dr = Vec::Zero(phi.codim);
  Vec u(d);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rem = idx;
    double wt = 1.0;
    for (int k = 0; k < d; ++k) {
      const int i = static_cast<int>(rem % q);
      rem /= q;
      u[k] = g.x[i];
      wt *= g.w[i];
    }
    wt *= mollifier(u);
    const Vec y = x - r * u;
    const Mat J = phi.jacobian(y);
    m.value += wt * phi.value(y);
    m.jacobian += wt * J;
    m.dr -= wt * (J * u);
  }
  return m;
}

Mat frame_rotation(const Mat& dphi, int n) {
  const int codim = static_cast<int>(dphi.rows());
  const int d = static_cast<int>(dphi.cols());
  Mat M = Mat::Identity(n, n);
  M.block(d, 0, codim, d) = dphi;
  Eigen::HouseholderQR<Mat> qr(M);
  Mat Q = qr.householderQ() * Mat::Identity(n, n);
  const Mat R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int k = 0; k < n; ++k)
    if (R(k, k) < 0.0) Q.col(k) = -Q.col(k);
  return Q;
}

CovMap cov_identity(int n, int d) {
  CovMap c;
  c.n = n;
  c.d = d;
  c.variant = "identity";
  c.map = [](const Vec& X) -> Vec { return X; };
  c.jacobian = [n](const Vec&) -> Mat { return Mat::Identity(n, n); };
  c.analytic_jacobian = true;
  return c;
}

CovMap cov_rho1(const GraphFunction& phi, int n) {
  const int d = phi.d;
  if (phi.codim != n - d) throw Error(ErrorKind::Dimension, "graph codimension != n - d");
  CovMap c;
  c.n = n;
  c.d = d;
  c.variant = "rho1";
  c.map = [phi, d, n](const Vec& X) -> Vec {
    Vec Y = X;
    Y.tail(n - d) += phi.value(X.head(d));
    return Y;
  };
  c.jacobian = [phi, d, n](const Vec& X) -> Mat {
    Mat J = Mat::Identity(n, n);
    J.block(d, 0, n - d, d) = phi.jacobian(X.head(d));
    return J;
  };
  c.analytic_jacobian = true;
  return c;
}

double rho2_default_c(const GraphFunction& phi) {
  return 1.0 + 2.0 * phi.lipschitz * mollifier_gradient_l1(phi.d);
}

CovMap cov_rho2(const GraphFunction& phi, int n, double cc) {
  const int d = phi.d;
  if (phi.codim != n - d) throw Error(ErrorKind::Dimension, "graph codimension != n - d");
  const double c = cc > 0.0 ? cc : rho2_default_c(phi);
  CovMap m;
  m.n = n;
  m.d = d;
  m.variant = "rho2";
  m.map = [phi, d, n, c](const Vec& X) -> Vec {
    const Vec t = X.tail(n - d);
    const MollifiedGraph g = mollify(phi, X.head(d), t.norm());
    Vec Y(n);
    Y.head(d) = X.head(d);
    Y.tail(n - d) = c * t + g.value;
    return Y;
  };
  m.jacobian = [phi, d, n, c](const Vec& X) -> Mat {
    const Vec t = X.tail(n - d);
    const double r = t.norm();
    const MollifiedGraph g = mollify(phi, X.head(d), r);
    Mat J = Mat::Zero(n, n);
    J.topLeftCorner(d, d).setIdentity();
    J.block(d, 0, n - d, d) = g.jacobian;
    J.bottomRightCorner(n - d, n - d) = c * Mat::Identity(n - d, n - d);
    if (r > 0.0) J.bottomRightCorner(n - d, n - d) += g.dr * (t / r).transpose();
    return J;
  };
  m.analytic_jacobian = true;
  return m;
}

namespace {

Mat centered_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& X, int d) {
  const int n = static_cast<int>(X.size());
  const double t = X.tail(n - d).norm();
  const double h = 1e-4 * (t > 0.0 ? t : 1.0);
  Mat J(n, n);
  for (int k = 0; k < n; ++k) {
    Vec a = X, b = X;
    a[k] += h;
    b[k] -= h;
    J.col(k) = (f(a) - f(b)) / (2.0 * h);
  }
  return J;
}

}  // namespace

CovMap cov_rho_full(const GraphFunction& phi, int n, std::function<double(const Vec&, double)> h) {
  const int d = phi.d;
  if (phi.codim != n - d) throw Error(ErrorKind::Dimension, "graph codimension != n - d");
  if (phi.lipschitz > 0.1) {
    std::ostringstream os;
    os << "rho_full requires Lip(phi) <= 0.1, got " << phi.lipschitz;
    throw Error(ErrorKind::Precondition, os.str());
  }
  CovMap m;
  m.n = n;
  m.d = d;
  m.variant = "rho_full";
  m.map = [phi, d, n, h](const Vec& X) -> Vec {
    const Vec x = X.head(d);
    const Vec t = X.tail(n - d);
    const double r = t.norm();
    const MollifiedGraph g = mollify(phi, x, r);
    const Mat Q = frame_rotation(g.jacobian, n);
    Vec e = Vec::Zero(n);
    e.tail(n - d) = t;
    Vec Y(n);
    Y.head(d) = x;
    Y.tail(n - d) = g.value;
    const double hh = h ? h(x, r) : 1.0;
    return Y + hh * (Q * e);
  };
  auto f = m.map;
  m.jacobian = [f, d](const Vec& X) -> Mat { return centered_jacobian(f, X, d); };
  m.analytic_jacobian = false;
  return m;
}

CovMap compose(const CovMap& rho, const CovMap& tau) {
  if (rho.n != tau.n) throw Error(ErrorKind::Dimension, "composed maps differ in dimension");
  CovMap c;
  c.n = rho.n;
  c.d = rho.d;
  c.variant = rho.variant + "o" + tau.variant;
  auto rm = rho.map, tm = tau.map;
  auto rj = rho.jacobian, tj = tau.jacobian;
  c.map = [rm, tm](const Vec& X) -> Vec { return rm(tm(X)); };
  c.jacobian = [rj, tm, tj](const Vec& X) -> Mat { return rj(tm(X)) * tj(X); };
  c.analytic_jacobian = rho.analytic_jacobian && tau.analytic_jacobian;
  return c;
}

BiLipschitz estimate_bilipschitz(const CovMap& rho, const Box& box, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> nrm(0.0, 1.0);
  const int n = rho.n;
  const double size = box.extent().maxCoeff();
  BiLipschitz b;
  for (int s = 0; s < samples; ++s) {
    Vec a(n), dir(n);
    for (int k = 0; k < n; ++k) a[k] = box.lo[k] + box.extent()[k] * u01(rng);
    for (int k = 0; k < n; ++k) dir[k] = nrm(rng);
    const double len = size * std::pow(10.0, -3.0 * u01(rng));
    const Vec bb = a + len * dir.normalized();
    const double ratio = (rho.map(a) - rho.map(bb)).norm() / (a - bb).norm();
    if (ratio < b.lower) {
      b.lower = ratio;
      if (1.0 / ratio > b.constant) {
        b.worst_a = a;
        b.worst_b = bb;
      }
    }
    if (ratio > b.upper) {
      b.upper = ratio;
      if (ratio > b.constant) {
        b.worst_a = a;
        b.worst_b = bb;
      }
    }
    b.constant = std::max(b.upper, 1.0 / b.lower);
  }
  return b;
}

MatrixField conjugate(const MatrixField& A, const CovMap& rho) {
  MatrixField f;
  f.n = A.n;
  const int d = rho.d;
  auto map = rho.map;
  auto jac = rho.jacobian;
  f.matrix = [A, map, jac](const Vec& X) -> Mat {
    const Mat J = jac(X);
    const double det = J.determinant();
    if (det == 0.0 || !std::isfinite(det)) throw Error(ErrorKind::Degenerate, "singular Jacobian in conjugation");
    const Mat Jinv = J.inverse();
    return std::abs(det) * Jinv.transpose() * A(map(X)) * Jinv;
  };
  f.weight = [d](const Vec& X) { return model_weight(d, X); };
  f.smoothness = std::min(A.smoothness, rho.analytic_jacobian ? 1 : 0);
  f.symmetric = A.symmetric;
  f.description = "conjugate(" + A.description + "," + rho.variant + ")";
  return f;
}

}  // namespace lowdim
