#pragma once

#include "lowdim/degenerate_solver.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace lowdim {

/// chi(x, t) = 1[|t| <= ell] 1_E(x) 1[e(x) <= |t|], E a ball of R^d or all of R^d, e >= 0 1-Lipschitz.
struct Cutoff {
  double ell = kInf;
  std::optional<Vec> center;  // E = B(center, radius); none => R^d
  double radius = kInf;
  std::function<double(const Vec&)> e;  // empty => e = 0

  /// x in R^d, s = |t|.
  bool operator()(const Vec& x, double s) const;
  /// chi_{2 ell, 2B, e/2}, which dominates *this pointwise.
  Cutoff doubled() const;

  static Cutoff everywhere() { return {}; }
  static Cutoff local(double ell, const Vec& center, double radius,
                      std::function<double(const Vec&)> e = {});
};

/// e(x) = scale * min_k |x - p_k|: dilated distance to a finite set, 1-Lipschitz for scale <= 1.
std::function<double(const Vec&)> sawtooth(const std::vector<Vec>& points, double scale);
std::function<double(const Vec&)> random_sawtooth(const Vec& center, double radius, int count, double scale,
                                                  std::uint64_t seed);

/// Boundary evaluation points x in R^d with equal cubature weights.
struct BoundaryPoints {
  std::vector<Vec> points;
  double weight = 0.0;
};
/// Cell-centred lattice of spacing h over the ball B(center, radius) of R^d.
BoundaryPoints boundary_lattice(const Vec& center, double radius, double h);

struct ConeFunctional {
  std::vector<Vec> points;
  std::vector<double> values;
  std::vector<char> empty;  // cone meets the cutoff support in no grid point
  double aperture = 1.4142135623730951;
  double p = 0.0;           // 0 for N
  double weight = 0.0;      // cubature weight of each point
  /// Relative change of the values when kappa is multiplied by 10 (p < 2 only).
  double kappa_sensitivity = 0.0;

  /// (sum_x |value|^q weight)^{1/q}.
  double lp_norm(double q) const;
};

struct FunctionalOptions {
  /// Cone gamma(x) = {X : |X - x| <= C4 delta(X)}.
  double aperture = 1.4142135623730951;
  /// |u|^{p-2} is regularized as (|u| + kappa)^{p-2}, kappa = kappa_rel * max|u|, when p < 2.
  double kappa_rel = 1e-12;
};

/// Grid-cell samples of a solution over flat Gamma = R^d x {0}: centre, value and gradient of the
/// multilinear interpolant, all normalized by scale = max |u| so the functionals are homogeneous.
class CellTable {
 public:
  explicit CellTable(const SolutionField& u);

  int d() const { return d_; }
  int n() const { return n_; }
  std::size_t size() const { return s_.size(); }
  double scale() const { return scale_; }
  const SolutionField& field() const { return u_; }

  Vec center(std::size_t c) const { return Eigen::Map<const Vec>(c_.data() + c * static_cast<std::size_t>(n_), n_); }
  Vec x(std::size_t c) const { return Eigen::Map<const Vec>(c_.data() + c * static_cast<std::size_t>(n_), d_); }
  double s(std::size_t c) const { return s_[c]; }
  double value(std::size_t c) const { return v_[c]; }            // normalized
  double grad2(std::size_t c) const { return g2_[c]; }           // |grad u|^2 / scale^2
  const Vec& gradient(std::size_t c) const { return grad_[c]; }  // normalized
  double volume(std::size_t c) const { return vol_[c]; }
  double radius() const { return radius_; }  // half diagonal of the largest cell

 private:
  SolutionField u_;
  int d_ = 0, n_ = 0;
  double scale_ = 0.0;
  double radius_ = 0.0;
  std::vector<double> c_, s_, v_, g2_, vol_;
  std::vector<Vec> grad_;
};

/// N(u|chi)(x) = max |u| chi over grid nodes of gamma(x) (nodes off Gamma).
ConeFunctional nontangential_max(const SolutionField& u, const BoundaryPoints& xs, const Cutoff& chi,
                                 const FunctionalOptions& opts = {});
/// S_p(u|chi)(x) = (sum over cells in gamma(x) of |grad u|^2 |u|^{p-2} chi |s|^{2-n} vol)^{1/p}.
ConeFunctional square_function(const CellTable& cells, double p, const BoundaryPoints& xs, const Cutoff& chi,
                               const FunctionalOptions& opts = {});

/// (sum over cells of |grad u|^2 |u|^{p-2} |t|^{d+1-n} vol)^{1/p}.
double wp_norm(const CellTable& cells, double p, const FunctionalOptions& opts = {});

struct CheckRecord {
  std::string id;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
};
void write_check_csv(const std::vector<CheckRecord>& records, const std::string& config_hash, std::ostream& out);
void write_functional_csv(const ConeFunctional& f, std::ostream& out);

struct RatioSummary {
  std::vector<CheckRecord> records;
  double max_ratio = 0.0;
  double min_ratio = kInf;
  int skipped = 0;  // 0/0 guards
  void add(CheckRecord r);
};

/// int_B |u|^2 dm / (r^2 int_B |grad u|^2 dm) with dm = |t|^{d+1-n} dX, B = B((x, 0), r).
RatioSummary poincare_check(const std::vector<SolutionField>& bank, const Vec& x, double r);
/// Functions psi(delta / r) * (1 + smooth random factor) with psi(0) = 0.
std::vector<SolutionField> poincare_bank(std::shared_ptr<const Grid> grid, double r, int count, std::uint64_t seed);

struct OscillationFit {
  std::vector<double> radii;
  std::vector<double> oscillation;
  double exponent = 0.0;
  bool skipped = false;  // oscillation identically zero
};
/// osc over grid nodes in B((x, 0), s) for each s, and the least-squares slope of log osc vs log s.
OscillationFit oscillation_decay(const SolutionField& u, const Vec& x, const std::vector<double>& radii);

/// lhs = sum A grad u . grad(|u|^{p-2} u) chi vol, rhs = sum |grad u|^2 |u|^{p-2} chi |t|^{d+1-n} vol.
RatioSummary p_ellipticity_check(const MatrixField& A, const std::vector<SolutionField>& bank,
                                 const std::vector<Cutoff>& cutoffs, double p, const FunctionalOptions& opts = {});

struct InteriorBall {
  Vec center;
  double radius;
};
/// lhs = int_B |grad u|^2 |u|^{p-2} dm, rhs = r^{-2} int_{2B} |u|^p dm, for balls with 2B inside Omega.
RatioSummary caccioppoli_check(const CellTable& cells, double p, const std::vector<InteriorBall>& balls,
                               const FunctionalOptions& opts = {});

struct NSBounds {
  double s_over_n = 0.0;  // ||S_q(chi_1)||_p / ||N(chi_2)||_p
  double n_over_s = 0.0;  // ||N(chi_1)||_p / (||S_q(chi_2)||_p + ell^d |u(x_B, ell)|)
  double s1 = 0.0, n1 = 0.0, s2 = 0.0, n2 = 0.0, anchor = 0.0;
};
/// chi_1 = chi_{ell, B, e}, chi_2 = chi_{2 ell, 2B, e/2}; norms over a lattice of spacing h on 2B.
NSBounds ns_bounds_check(const CellTable& cells, double p, double q, double ell, const Vec& xB, double rB,
                         const std::function<double(const Vec&)>& e, double h, const FunctionalOptions& opts = {});

/// (1 / sigma(Delta)) int_{B((x,0), r)} |grad u|^2 |t|^{d-n+2} dX for Delta = B(x, r) on R^d.
double carleson_energy(const CellTable& cells, const Vec& x, double r);

/// sup over the balls of (avg_B |f - f_B|^2)^{1/2}, midpoint cubature with m points per axis.
double bmo_norm(const std::function<double(const Vec&)>& f, const std::vector<std::pair<Vec, double>>& balls,
                int m = 400);

}  // namespace lowdim
