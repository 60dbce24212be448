#pragma once

#include "lowdim/boundary_geometry.hpp"
#include "lowdim/carleson.hpp"

#include <cstdint>
#include <memory>
#include <vector>

namespace lowdim {

/// D_alpha(X) = (sum_i s_i |X - y_i|^{-d-alpha})^{-1/alpha} with derivatives.
struct DAlphaJet {
  int order = 0;
  double value = 0.0;
  Vec gradient;
  double laplacian = 0.0;
  /// Raw kernel sums I0, grad I0, Laplacian I0.
  double i0 = 0.0;
  Vec grad_i0;
  double lap_i0 = 0.0;
  /// Relative error bound on I0 (window truncation plus quadrature aliasing).
  double relative_error = 0.0;
  double error_value = 0.0;
  double error_gradient = 0.0;
  double error_laplacian = 0.0;
  double delta = 0.0;  // dist(X, Gamma) used for the accuracy precondition
};

/// Kernel-sum evaluator over a fixed quadrature rule (plus far-field tail nodes for
/// unbounded one-dimensional boundaries).
class RegularizedDistance {
 public:
  RegularizedDistance(BoundarySet gamma, QuadratureRule rule, double alpha, bool tail_nodes = true);

  /// Throws ErrorKind::Accuracy when delta(X) < 4 h_L (unless `check_accuracy` is false).
  DAlphaJet jet(const Vec& X, int order, bool check_accuracy = true) const;
  double value(const Vec& X) const { return jet(X, 0).value; }

  double alpha() const { return alpha_; }
  double covering_radius() const { return rule_.covering_radius; }
  const QuadratureRule& rule() const { return rule_; }
  const BoundarySet& boundary() const { return gamma_; }
  std::size_t tail_size() const { return weights_.size() - rule_.size(); }
  /// Combined nodes (window + tail) as a positive discrete measure.
  const std::vector<double>& all_nodes() const { return nodes_; }
  const std::vector<double>& all_weights() const { return weights_; }

 private:
  void build_tail();
  double relative_error(const Vec& X, double delta, double i0) const;

  BoundarySet gamma_;
  QuadratureRule rule_;
  double alpha_;
  double p_;  // d + alpha
  int n_;
  bool interval_tail_ = false;  // d >= 2 unbounded: analytic tail interval only
  double c0_ = 1.0;
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

/// Picks the coarsest level with h_L <= delta(X)/4 from a pyramid of rules over the
/// same window; used for coefficient sampling in assembly.
class AdaptiveRegularizedDistance {
 public:
  AdaptiveRegularizedDistance(const BoundarySet& gamma, const Box& window, double alpha,
                              int min_level, int max_level);
  DAlphaJet jet(const Vec& X, int order) const;
  double value(const Vec& X) const { return jet(X, 0).value; }
  double finest_covering_radius() const;
  const BoundarySet& boundary() const { return levels_.front()->boundary(); }
  double alpha() const { return levels_.front()->alpha(); }

 private:
  std::vector<std::shared_ptr<RegularizedDistance>> levels_;
};

/// Convenience one-shot evaluation.
DAlphaJet d_alpha_jet(const BoundarySet& gamma, const QuadratureRule& rule, double alpha,
                      const Vec& X, int order);

struct MagicResidual {
  double residual = 0.0;
  double gradient_norm = 0.0;
  DAlphaJet jet;
};

/// R(X) = |D lap D + (d+1-n)|grad D|^2| / |grad D|^2. Throws ErrorKind::Degenerate when
/// |grad D| is numerically zero.
MagicResidual magic_residual(const RegularizedDistance& rd, const Vec& X);

/// Closed form for flat R^d: D_alpha(x, t) = c^{-1/alpha} |t|,
/// c = pi^{d/2} Gamma(alpha/2) / Gamma((d+alpha)/2).
double flat_d_alpha_constant(int d, double alpha);

struct ComparabilityScan {
  double min_ratio = kInf;
  double max_ratio = 0.0;
  int samples = 0;
};

/// Random X with delta(X) in [8 h_L, R_max]; R_max = diam (bounded) or a quarter of the window.
ComparabilityScan comparability_scan(const RegularizedDistance& rd, int samples, std::uint64_t seed);

/// Random evaluation points with delta(X) >= min_delta_factor * h_L (shared by scans and tests).
std::vector<Vec> sample_points_off_gamma(const BoundarySet& gamma, const QuadratureRule& rule,
                                         int samples, double min_delta, double max_delta,
                                         std::uint64_t seed);

struct BetaNumber {
  Vec center;
  double radius = 0.0;
  double raw = 0.0;    // sup |phi - a| for the best affine a found
  double value = 0.0;  // raw / radius
  int iterations = 0;
};

/// Minimax affine fit by Lawson's iteratively reweighted least squares (50 iterations).
BetaNumber beta_infinity(const GraphFunction& phi, const Vec& x, double r, int grid_per_axis = 65);

/// Dyadic Carleson sum of beta^2 over the region (d = 1 claimed; d > 1 flagged).
struct BetaCarleson {
  CarlesonReport report;
  std::vector<BetaNumber> betas;  // every evaluated dyadic cube, coarse to fine
  bool outside_claim = false;     // true when d != 1
};

BetaCarleson beta_carleson(const GraphFunction& phi, const Box& region, int dyadic_levels);

}  // namespace lowdim
