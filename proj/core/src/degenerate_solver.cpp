#include "lowdim/degenerate_solver.hpp"

#include "lowdim/gauss.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace lowdim {

using SpMat = Eigen::SparseMatrix<double>;

struct SolverCache {
  std::unique_ptr<Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper, Eigen::IncompleteCholesky<double>>> cg;
  std::unique_ptr<Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper>> cg_diag;
  std::unique_ptr<Eigen::BiCGSTAB<SpMat, Eigen::IncompleteLUT<double>>> bicg;
  std::unique_ptr<Eigen::BiCGSTAB<SpMat, Eigen::IncompleteLUT<double>>> bicg_t;
  std::unique_ptr<Eigen::SimplicialLDLT<SpMat>> ldlt;
  std::unique_ptr<Eigen::SparseLU<SpMat>> lu;
  std::unique_ptr<Eigen::SparseLU<SpMat>> lu_t;
  SpMat KIIt;
};

namespace {

constexpr double kGauss2 = 0.28867513459481287;  // 1 / (2 sqrt 3)

/// Coefficient access with optional interpolation of the reduced scalar A / w.
class Coefficients {
 public:
  Coefficients(const MatrixField& A, const Grid& grid, bool interpolate)
      : A_(A), grid_(grid), interpolate_(interpolate && A.is_scalar() && A.weight) {
    if (!interpolate_) return;
    q_.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const Vec X = grid.point(i);
      try {
        q_[i] = reduced(X);
      } catch (const Error&) {
        // Too close to Gamma for the field: sample the same ratio slightly farther out.
        const double dl = grid.delta(i);
        const Vec foot = grid.foot(i);
        const double target = 2.0 * std::max(grid.band_width(), grid.h_min());
        const Vec Y = dl > 0.0 ? Vec(foot + (X - foot) * (target / dl)) : Vec(X);
        q_[i] = reduced(Y);
      }
    }
  }

  bool scalar() const { return A_.is_scalar(); }

  double scalar_at(const Vec& X) const {
    if (!interpolate_) return A_.scalar(X);
    const auto c = grid_.locate(X);
    const int n = grid_.dim();
    double v = 0.0;
    for (unsigned m = 0; m < (1U << n); ++m) {
      double wgt = 1.0;
      std::size_t node = 0;
      for (int k = 0; k < n; ++k) {
        const int b = static_cast<int>((m >> k) & 1U);
        wgt *= b ? c.frac[k] : 1.0 - c.frac[k];
        node += static_cast<std::size_t>(c.lower[k] + b) * grid_.stride(k);
      }
      if (wgt != 0.0) v += wgt * q_[node];
    }
    return A_.weight(X) * v;
  }

  Mat matrix_at(const Vec& X) const { return A_(X); }

 private:
  double reduced(const Vec& X) const {
    const double w = A_.weight(X);
    const double v = A_.scalar(X) / w;
    if (!std::isfinite(v)) throw Error(ErrorKind::Domain, "reduced coefficient not finite");
    return v;
  }

  const MatrixField& A_;
  const Grid& grid_;
  bool interpolate_;
  std::vector<double> q_;
};

bool is_dirichlet(const Grid& g, std::size_t node) { return g.kind(node) != NodeKind::Interior; }

}  // namespace

DiscreteProblem assemble(const MatrixField& A, std::shared_ptr<const Grid> gridp, const AssemblyOptions& opts) {
  const Grid& grid = *gridp;
  const int n = grid.dim();
  if (A.n != n) throw Error(ErrorKind::Dimension, "operator dimension != grid dimension");
  const Coefficients coef(A, grid, opts.interpolate_reduced);
  const bool scalar = coef.scalar();
  const std::size_t N = grid.size();

  DiscreteProblem P;
  P.grid = gridp;
  P.scalar = scalar;
  P.operator_description = A.description;
  P.unknown_of.assign(N, -1);
  P.boundary_of.assign(N, -1);
  for (std::size_t i = 0; i < N; ++i) {
    if (is_dirichlet(grid, i)) {
      P.boundary_of[i] = static_cast<std::ptrdiff_t>(P.boundary_nodes.size());
      P.boundary_nodes.push_back(i);
    } else {
      P.unknown_of[i] = static_cast<std::ptrdiff_t>(P.interior_nodes.size());
      P.interior_nodes.push_back(i);
    }
  }

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(N * static_cast<std::size_t>(2 * n + 1) * (scalar ? 1 : 3));
  bool any_cross = false;

  std::vector<int> idx(static_cast<std::size_t>(n));
  Vec X(n);
  const std::size_t npts = std::size_t{1} << n;
  std::vector<double> akk(npts);
  std::vector<Mat> mats(scalar ? 0 : npts);

  for (std::size_t i = 0; i < N; ++i) {
    for (int k = 0; k < n; ++k) idx[k] = grid.index_along(i, k);
    for (int k = 0; k < n; ++k) {
      const auto& ak = grid.axis(k);
      if (idx[k] + 1 >= static_cast<int>(ak.size())) continue;
      const std::size_t j = i + grid.stride(k);
      const bool ri = !is_dirichlet(grid, i), rj = !is_dirichlet(grid, j);
      if (!ri && !rj) continue;

      const double x0 = ak[static_cast<std::size_t>(idx[k])];
      const double dx = ak[static_cast<std::size_t>(idx[k] + 1)] - x0;
      double area = 1.0;
      for (int m = 0; m < n; ++m)
        if (m != k) area *= grid.dual_width(m, idx[m]);

      // 2^n sample points: two normal Gauss positions times 2^{n-1} tangential ones.
      for (std::size_t p = 0; p < npts; ++p) {
        for (int m = 0; m < n; ++m) {
          const int b = static_cast<int>((p >> m) & 1U);
          if (m == k) {
            X[m] = x0 + dx * (0.5 + (b ? kGauss2 : -kGauss2));
          } else {
            const auto& am = grid.axis(m);
            const int im = idx[m];
            const int last = static_cast<int>(am.size()) - 1;
            const double lo = im == 0 ? am[0] : 0.5 * (am[im - 1] + am[im]);
            const double hi = im == last ? am[last] : 0.5 * (am[im] + am[im + 1]);
            X[m] = 0.5 * (lo + hi) + (hi - lo) * (b ? kGauss2 : -kGauss2);
          }
        }
        if (scalar) {
          akk[p] = coef.scalar_at(X);
        } else {
          mats[p] = coef.matrix_at(X);
          akk[p] = mats[p](k, k);
        }
        if (!std::isfinite(akk[p])) {
          std::ostringstream os;
          os << "infinite coefficient sampled at a face near node " << i;
          throw Error(ErrorKind::Domain, os.str());
        }
      }
      double mean[2] = {0.0, 0.0};
      for (std::size_t p = 0; p < npts; ++p) mean[(p >> k) & 1U] += akk[p];
      mean[0] /= static_cast<double>(npts / 2);
      mean[1] /= static_cast<double>(npts / 2);
      if (!(mean[0] > 0.0 && mean[1] > 0.0))
        throw Error(ErrorKind::NonElliptic, "non-positive normal coefficient at a face");
      const double a = 2.0 / (1.0 / mean[0] + 1.0 / mean[1]);
      const double t = a * area / dx;
      if (ri) {
        trip.emplace_back(i, i, t);
        trip.emplace_back(i, j, -t);
      }
      if (rj) {
        trip.emplace_back(j, j, t);
        trip.emplace_back(j, i, -t);
      }
      if (scalar) continue;

      // Cross fluxes a_km d_m u with d_m u averaged from centered differences at i and j.
      for (int m = 0; m < n; ++m) {
        if (m == k) continue;
        double akm = 0.0;
        for (std::size_t p = 0; p < npts; ++p) akm += mats[p](k, m);
        akm /= static_cast<double>(npts);
        if (akm == 0.0) continue;
        any_cross = true;
        const auto& am = grid.axis(m);
        const int im = idx[m];
        if (im == 0 || im + 1 >= static_cast<int>(am.size())) continue;
        const double span = am[static_cast<std::size_t>(im + 1)] - am[static_cast<std::size_t>(im - 1)];
        const double c = 0.5 * akm * area / span;
        const std::size_t sm = grid.stride(m);
        const std::size_t nb[4] = {i + sm, i - sm, j + sm, j - sm};
        const double sg[4] = {1.0, -1.0, 1.0, -1.0};
        for (int q = 0; q < 4; ++q) {
          // Row i loses the flux through its upper face; row j gains it.
          if (ri) trip.emplace_back(i, nb[q], -c * sg[q]);
          if (rj) trip.emplace_back(j, nb[q], c * sg[q]);
        }
      }
    }
  }

  for (std::size_t i = 0; i < N; ++i)
    if (is_dirichlet(grid, i)) trip.emplace_back(i, i, 1.0);

  P.K.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  P.K.setFromTriplets(trip.begin(), trip.end());
  P.K.makeCompressed();
  P.symmetric = !any_cross;

  std::vector<Eigen::Triplet<double>> tii, tib;
  tii.reserve(trip.size());
  for (const auto& tr : trip) {
    const auto r = P.unknown_of[static_cast<std::size_t>(tr.row())];
    if (r < 0) continue;
    const auto c = static_cast<std::size_t>(tr.col());
    if (P.unknown_of[c] >= 0) tii.emplace_back(r, P.unknown_of[c], tr.value());
    else tib.emplace_back(r, P.boundary_of[c], tr.value());
  }
  const auto nI = static_cast<Eigen::Index>(P.interior_nodes.size());
  const auto nB = static_cast<Eigen::Index>(P.boundary_nodes.size());
  P.KII.resize(nI, nI);
  P.KII.setFromTriplets(tii.begin(), tii.end());
  P.KII.makeCompressed();
  P.KIB.resize(nI, nB);
  P.KIB.setFromTriplets(tib.begin(), tib.end());
  P.KIB.makeCompressed();
  return P;
}

DiscreteProblem build_and_assemble(const MatrixField& A, const Box& box, const BoundarySet& gamma,
                                   GridOptions opts, const AssemblyOptions& aopts) {
  try {
    return assemble(A, std::make_shared<const Grid>(Grid::build(box, gamma, opts)), aopts);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Domain) throw;
  }
  opts.jitter += 1.0 / 7.0;
  return assemble(A, std::make_shared<const Grid>(Grid::build(box, gamma, opts)), aopts);
}

// ---------------------------------------------------------------------------
// Linear solves

namespace {

bool use_direct(const DiscreteProblem& P, const SolverOptions& o) {
  if (o.method == SolverMethod::Direct) return true;
  if (o.method == SolverMethod::Iterative) return false;
  return static_cast<std::size_t>(P.KII.rows()) <= o.direct_limit;
}

struct SolveInfo {
  int iterations = 0;
  double residual = 0.0;
};

[[noreturn]] void fail_convergence(double residual, int iterations) {
  std::ostringstream os;
  os << "iterative solver stopped at relative residual " << residual << " after " << iterations
     << " iterations";
  throw Error(ErrorKind::Convergence, os.str());
}

Eigen::VectorXd solve_system(const DiscreteProblem& P, const Eigen::VectorXd& b, bool transpose,
                             const SolverOptions& o, SolveInfo& info) {
  std::lock_guard<std::mutex> lock(*P.cache_mutex);
  if (!P.cache) P.cache = std::make_shared<SolverCache>();
  SolverCache& c = *P.cache;
  if (b.size() == 0) return b;
  if (b.norm() == 0.0) return Eigen::VectorXd::Zero(b.size());
  const bool sym = P.symmetric;
  if (use_direct(P, o)) {
    Eigen::VectorXd x;
    if (sym) {
      if (!c.ldlt) {
        c.ldlt = std::make_unique<Eigen::SimplicialLDLT<SpMat>>(P.KII);
        if (c.ldlt->info() != Eigen::Success) throw Error(ErrorKind::Convergence, "LDLT factorization failed");
      }
      x = c.ldlt->solve(b);
    } else {
      auto& lu = transpose ? c.lu_t : c.lu;
      if (!lu) {
        lu = std::make_unique<Eigen::SparseLU<SpMat>>();
        if (transpose) {
          SpMat t = P.KII.transpose();
          lu->compute(t);
        } else {
          lu->compute(P.KII);
        }
        if (lu->info() != Eigen::Success) throw Error(ErrorKind::Convergence, "LU factorization failed");
      }
      x = lu->solve(b);
    }
    const SpMat& K = P.KII;
    const Eigen::VectorXd r = transpose ? Eigen::VectorXd(K.transpose() * x - b) : Eigen::VectorXd(K * x - b);
    info.iterations = 1;
    info.residual = r.norm() / b.norm();
    return x;
  }
  if (sym) {
    if (!c.cg && !c.cg_diag) {
      c.cg = std::make_unique<std::remove_reference_t<decltype(*c.cg)>>();
      c.cg->compute(P.KII);
      if (c.cg->info() != Eigen::Success) {
        c.cg.reset();
        c.cg_diag = std::make_unique<std::remove_reference_t<decltype(*c.cg_diag)>>();
        c.cg_diag->compute(P.KII);
      }
    }
    Eigen::VectorXd x;
    if (c.cg) {
      c.cg->setTolerance(o.tolerance);
      c.cg->setMaxIterations(o.max_iterations);
      x = c.cg->solve(b);
      info.iterations = static_cast<int>(c.cg->iterations());
      info.residual = c.cg->error();
      if (c.cg->info() != Eigen::Success) fail_convergence(info.residual, info.iterations);
    } else {
      c.cg_diag->setTolerance(o.tolerance);
      c.cg_diag->setMaxIterations(o.max_iterations);
      x = c.cg_diag->solve(b);
      info.iterations = static_cast<int>(c.cg_diag->iterations());
      info.residual = c.cg_diag->error();
      if (c.cg_diag->info() != Eigen::Success) fail_convergence(info.residual, info.iterations);
    }
    return x;
  }
  auto& s = transpose ? c.bicg_t : c.bicg;
  if (!s) {
    s = std::make_unique<Eigen::BiCGSTAB<SpMat, Eigen::IncompleteLUT<double>>>();
    s->preconditioner().setDroptol(1e-5);
    s->preconditioner().setFillfactor(20);
    if (transpose) {
      c.KIIt = P.KII.transpose();
      s->compute(c.KIIt);
    } else {
      s->compute(P.KII);
    }
  }
  s->setTolerance(o.tolerance);
  s->setMaxIterations(o.max_iterations);
  Eigen::VectorXd x = s->solve(b);
  info.iterations = static_cast<int>(s->iterations());
  info.residual = s->error();
  if (s->info() != Eigen::Success) fail_convergence(info.residual, info.iterations);
  return x;
}

}  // namespace

SolutionField::SolutionField(std::shared_ptr<const Grid> grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_->size()) throw Error(ErrorKind::Dimension, "solution size != grid size");
}

double SolutionField::at(const Vec& X) const {
  const auto c = grid_->locate(X);
  const int n = grid_->dim();
  double v = 0.0;
  for (unsigned m = 0; m < (1U << n); ++m) {
    double w = 1.0;
    std::size_t node = 0;
    for (int k = 0; k < n; ++k) {
      const int b = static_cast<int>((m >> k) & 1U);
      w *= b ? c.frac[k] : 1.0 - c.frac[k];
      node += static_cast<std::size_t>(c.lower[k] + b) * grid_->stride(k);
    }
    if (w != 0.0) v += w * values_[node];
  }
  return v;
}

Vec SolutionField::gradient(const Vec& X) const {
  const auto c = grid_->locate(X);
  const int n = grid_->dim();
  Vec g = Vec::Zero(n);
  for (unsigned m = 0; m < (1U << n); ++m) {
    std::size_t node = 0;
    for (int k = 0; k < n; ++k)
      node += static_cast<std::size_t>(c.lower[k] + static_cast<int>((m >> k) & 1U)) * grid_->stride(k);
    const double u = values_[node];
    for (int k = 0; k < n; ++k) {
      double w = 1.0;
      for (int j = 0; j < n; ++j) {
        const int b = static_cast<int>((m >> j) & 1U);
        if (j == k) w *= (b ? 1.0 : -1.0) / c.width[j];
        else w *= b ? c.frac[j] : 1.0 - c.frac[j];
      }
      g[k] += w * u;
    }
  }
  return g;
}

Vec SolutionField::node_gradient(std::size_t node) const {
  const int n = grid_->dim();
  Vec g(n);
  for (int k = 0; k < n; ++k) {
    const auto& a = grid_->axis(k);
    const int i = grid_->index_along(node, k);
    const int last = static_cast<int>(a.size()) - 1;
    const std::size_t s = grid_->stride(k);
    const int lo = i == 0 ? 0 : i - 1;
    const int hi = i == last ? last : i + 1;
    const std::size_t nlo = node - static_cast<std::size_t>(i - lo) * s;
    const std::size_t nhi = node + static_cast<std::size_t>(hi - i) * s;
    g[k] = (values_[nhi] - values_[nlo]) / (a[static_cast<std::size_t>(hi)] - a[static_cast<std::size_t>(lo)]);
  }
  return g;
}

std::vector<double> dirichlet_data(const Grid& grid, const std::function<double(const Vec&)>& on_gamma,
                                   const std::function<double(const Vec&)>& on_shell) {
  std::vector<double> v(grid.size(), 0.0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid.kind(i) == NodeKind::GammaBand) v[i] = on_gamma(grid.foot(i));
    else if (grid.kind(i) == NodeKind::OuterShell) v[i] = on_shell(grid.point(i));
  }
  return v;
}

SolutionField solve_dirichlet(const DiscreteProblem& P, const std::vector<double>& dirichlet,
                              const SolverOptions& opts) {
  const Grid& grid = *P.grid;
  if (dirichlet.size() != grid.size()) throw Error(ErrorKind::Dimension, "Dirichlet vector size != grid size");
  Eigen::VectorXd gB(static_cast<Eigen::Index>(P.boundary_nodes.size()));
  double lo = kInf, hi = -kInf;
  for (std::size_t b = 0; b < P.boundary_nodes.size(); ++b) {
    const double v = dirichlet[P.boundary_nodes[b]];
    if (!std::isfinite(v)) throw Error(ErrorKind::Domain, "non-finite Dirichlet value");
    gB[static_cast<Eigen::Index>(b)] = v;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const Eigen::VectorXd rhs = -(P.KIB * gB);
  SolveInfo info;
  const Eigen::VectorXd uI = solve_system(P, rhs, false, opts, info);
  std::vector<double> u(grid.size());
  for (std::size_t b = 0; b < P.boundary_nodes.size(); ++b) u[P.boundary_nodes[b]] = gB[static_cast<Eigen::Index>(b)];
  double violation = 0.0;
  for (std::size_t r = 0; r < P.interior_nodes.size(); ++r) {
    const double v = uI[static_cast<Eigen::Index>(r)];
    u[P.interior_nodes[r]] = v;
    violation = std::max({violation, lo - v, v - hi});
  }
  SolutionField f(P.grid, std::move(u));
  f.operator_description = P.operator_description;
  f.data_hash = hash_doubles(gB.data(), static_cast<std::size_t>(gB.size()));
  f.iterations = info.iterations;
  f.residual = info.residual;
  f.max_principle_violation = violation;
  if (P.scalar) {
    const double scale = std::max({hi - lo, std::abs(hi), std::abs(lo), 1e-300});
    if (violation > opts.max_principle_tolerance * scale) {
      std::ostringstream os;
      os << "discrete maximum principle violated by " << violation;
      throw Error(ErrorKind::Convergence, os.str());
    }
  }
  return f;
}

SolutionField green_function(const DiscreteProblem& P, std::size_t Y, const SolverOptions& opts) {
  if (Y >= P.unknown_of.size() || P.unknown_of[Y] < 0)
    throw Error(ErrorKind::Domain, "Green pole must be an interior node");
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(P.KII.rows());
  rhs[P.unknown_of[Y]] = 1.0;
  SolveInfo info;
  const Eigen::VectorXd g = solve_system(P, rhs, false, opts, info);
  std::vector<double> u(P.grid->size(), 0.0);
  for (std::size_t r = 0; r < P.interior_nodes.size(); ++r) u[P.interior_nodes[r]] = g[static_cast<Eigen::Index>(r)];
  SolutionField f(P.grid, std::move(u));
  f.operator_description = P.operator_description;
  f.iterations = info.iterations;
  f.residual = info.residual;
  return f;
}

double DiscreteMeasure::total() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }

double DiscreteMeasure::apply(const std::vector<double>& node_values) const {
  double s = 0.0;
  for (std::size_t j = 0; j < nodes.size(); ++j) s += weights[j] * node_values[nodes[j]];
  return s;
}

DiscreteMeasure measure_at(const DiscreteProblem& P, const Vec& X, const SolverOptions& opts) {
  const Grid& grid = *P.grid;
  const int n = grid.dim();
  const auto cell = grid.locate(X);
  Eigen::VectorXd cI = Eigen::VectorXd::Zero(P.KII.rows());
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(P.boundary_nodes.size()));
  for (unsigned m = 0; m < (1U << n); ++m) {
    double w = 1.0;
    std::size_t node = 0;
    for (int k = 0; k < n; ++k) {
      const int b = static_cast<int>((m >> k) & 1U);
      w *= b ? cell.frac[k] : 1.0 - cell.frac[k];
      node += static_cast<std::size_t>(cell.lower[k] + b) * grid.stride(k);
    }
    if (w == 0.0) continue;
    if (P.unknown_of[node] >= 0) cI[P.unknown_of[node]] += w;
    else mu[P.boundary_of[node]] += w;
  }
  SolveInfo info;
  const Eigen::VectorXd z = solve_system(P, cI, true, opts, info);
  mu -= P.KIB.transpose() * z;
  DiscreteMeasure out;
  for (std::size_t b = 0; b < P.boundary_nodes.size(); ++b) {
    const double v = mu[static_cast<Eigen::Index>(b)];
    if (v == 0.0) continue;
    out.nodes.push_back(P.boundary_nodes[b]);
    out.weights.push_back(v);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Weak residual

std::vector<std::size_t> default_test_nodes(const Grid& grid, std::size_t max_count, std::uint64_t seed) {
  const int n = grid.dim();
  std::vector<std::size_t> ok;
  std::size_t neigh = 1;
  for (int k = 0; k < n; ++k) neigh *= 3;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid.kind(i) != NodeKind::Interior) continue;
    bool good = true;
    for (int k = 0; k < n && good; ++k) {
      const int ik = grid.index_along(i, k);
      if (ik < 2 || ik + 2 >= static_cast<int>(grid.axis(k).size())) good = false;
    }
    for (std::size_t m = 0; m < neigh && good; ++m) {
      std::size_t rem = m;
      std::ptrdiff_t off = 0;
      for (int k = 0; k < n; ++k) {
        off += (static_cast<std::ptrdiff_t>(rem % 3) - 1) * static_cast<std::ptrdiff_t>(grid.stride(k));
        rem /= 3;
      }
      if (grid.kind(static_cast<std::size_t>(static_cast<std::ptrdiff_t>(i) + off)) != NodeKind::Interior) good = false;
    }
    if (good) ok.push_back(i);
  }
  if (ok.size() > max_count) {
    std::mt19937_64 rng(seed);
    std::shuffle(ok.begin(), ok.end(), rng);
    ok.resize(max_count);
    std::sort(ok.begin(), ok.end());
  }
  return ok;
}

double weak_residual(const SolutionField& u, const MatrixField& A, const std::vector<std::size_t>& test_nodes) {
  const Grid& grid = u.grid();
  const int n = grid.dim();
  const unsigned ncell = 1U << n;
  double worst = 0.0;
  Vec X(n), gu(n), gp(n);
  for (std::size_t node : test_nodes) {
    double r = 0.0, np = 0.0, nu = 0.0;
    std::vector<int> base(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) base[k] = grid.index_along(node, k);
    for (unsigned s = 0; s < ncell; ++s) {
      // Cell with lower corner node - e_S; the test node sits at its corner (bit k set => upper along k).
      std::vector<int> lower(base);
      bool valid = true;
      for (int k = 0; k < n; ++k) {
        if ((s >> k) & 1U) --lower[k];
        if (lower[k] < 0 || lower[k] + 1 >= static_cast<int>(grid.axis(k).size())) valid = false;
      }
      if (!valid) continue;
      Vec width(n);
      for (int k = 0; k < n; ++k)
        width[k] = grid.axis(k)[static_cast<std::size_t>(lower[k] + 1)] - grid.axis(k)[static_cast<std::size_t>(lower[k])];
      const std::size_t origin = grid.flatten(lower);
      double cu[16];
      for (unsigned m = 0; m < ncell; ++m) {
        std::size_t nd = origin;
        for (int k = 0; k < n; ++k)
          if ((m >> k) & 1U) nd += grid.stride(k);
        cu[m] = u.value(nd);
      }
      for (unsigned q = 0; q < ncell; ++q) {
        Vec f(n);
        double wq = 1.0;
        for (int k = 0; k < n; ++k) {
          f[k] = 0.5 + (((q >> k) & 1U) ? kGauss2 : -kGauss2);
          X[k] = grid.axis(k)[static_cast<std::size_t>(lower[k])] + f[k] * width[k];
          wq *= 0.5 * width[k];
        }
        gu.setZero();
        for (unsigned m = 0; m < ncell; ++m) {
          for (int k = 0; k < n; ++k) {
            double w = 1.0;
            for (int j = 0; j < n; ++j) {
              const bool b = (m >> j) & 1U;
              w *= j == k ? (b ? 1.0 : -1.0) / width[j] : (b ? f[j] : 1.0 - f[j]);
            }
            gu[k] += w * cu[m];
          }
        }
        for (int k = 0; k < n; ++k) {
          double w = 1.0;
          for (int j = 0; j < n; ++j) {
            const bool b = (s >> j) & 1U;  // node at the upper corner along j
            w *= j == k ? (b ? 1.0 : -1.0) / width[j] : (b ? f[j] : 1.0 - f[j]);
          }
          gp[k] = w;
        }
        const Mat a = A(X);
        const Mat as = 0.5 * (a + a.transpose());
        r += wq * gp.dot(a * gu);
        np += wq * gp.dot(as * gp);
        nu += wq * gu.dot(as * gu);
      }
    }
    if (nu > 0.0 && np > 0.0) worst = std::max(worst, std::abs(r) / std::sqrt(np * nu));
  }
  return worst;
}

SolutionField sample_field(std::shared_ptr<const Grid> grid, const std::function<double(const Vec&)>& f) {
  std::vector<double> v(grid->size());
  for (std::size_t i = 0; i < grid->size(); ++i) v[i] = f(grid->point(i));
  return SolutionField(std::move(grid), std::move(v));
}

}  // namespace lowdim
