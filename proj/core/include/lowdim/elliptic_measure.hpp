#pragma once

#include "lowdim/degenerate_solver.hpp"
#include "lowdim/model_oracle.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace lowdim {

/// E subset of Gamma: a union of ambient balls centred on Gamma, optionally complemented.
struct SurfaceSet {
  std::vector<Vec> centers;
  std::vector<double> radii;
  bool complement = false;
  std::string id;

  static SurfaceSet ball(const Vec& center, double radius, std::string id = {});
  static SurfaceSet everything(std::string id = "all");
  bool contains(const Vec& y) const;
  /// Parameter intervals of the union on a flat R^1 (planes with d = 1).
  std::vector<std::pair<double, double>> intervals() const;
  SurfaceSet complemented() const;
};

/// Exact model-case measure: half-space Poisson integral of E at pole (x, s).
/// d = 1: E given as intervals (closed form); d = 2: E given as indicator (adaptive quadrature).
double model_measure_exact(const std::vector<std::pair<double, double>>& E, double x, double s);
double model_measure_exact(int d, const Vec& x, double s, const SurfaceSet& E);

struct MeasureEstimate {
  Vec pole;
  std::string set_id;
  double value = 0.0;
  double raw_value = 0.0;  // before clamping to [0, 1]
  bool clamped = false;
  double sigma = 0.0;      // sigma(E) from the quadrature weights
  double mollification_width = 0.0;
  double h_min = 0.0;
  double error_proxy = 0.0;  // |difference| against a second resolution when available
};

/// Shell data for indicator boundary values: u_E on the outer shell, or none (zero truncation).
using ShellModel = std::function<double(const Vec& X, const SurfaceSet& E)>;
/// Shell values from the half-space Poisson integral (flat Gamma, d = 1 or 2, operators with model measure).
ShellModel model_shell(int d);

struct MeasureConfig {
  GridOptions grid;
  AssemblyOptions assembly;
  SolverOptions solver;
  Box box;
  /// Quadrature level for sigma(E) and the mollified indicators; chosen from h_min when negative.
  int quadrature_level = -1;
  /// Mollification width as a multiple of h_min (sigma-ball average of diameter width).
  double mollification = 2.0;
  ShellModel shell;  // empty => zero truncation (flagged)
};

/// One assembled problem reused across poles and sets: omega^X(E) = sum_j mu^X_j g_E(j).
class MeasureSolver {
 public:
  MeasureSolver(const BoundarySet& gamma, const MatrixField& A, MeasureConfig cfg);

  const DiscreteProblem& problem() const { return problem_; }
  const Grid& grid() const { return *problem_.grid; }
  const BoundarySet& boundary() const { return gamma_; }
  const QuadratureRule& rule() const { return rule_; }
  double h_min() const { return grid().h_min(); }
  bool truncated_shell() const { return !cfg_.shell; }

  const DiscreteMeasure& measure(const Vec& X);
  MeasureEstimate omega(const Vec& X, const SurfaceSet& E);
  double sigma(const SurfaceSet& E) const;
  /// Mollified indicator of E at every Dirichlet node (band: sigma-ball average; shell: shell model).
  std::vector<double> indicator_data(const SurfaceSet& E) const;
  /// Smallest sub-ball radius resolved by the grid.
  double resolution_radius() const { return cfg_.mollification * h_min(); }

 private:
  BoundarySet gamma_;
  MeasureConfig cfg_;
  DiscreteProblem problem_;
  QuadratureRule rule_;
  std::vector<std::size_t> band_;
  std::vector<std::vector<std::pair<std::size_t, double>>> stencil_;  // per band node: rule nodes and weights
  std::map<std::vector<double>, DiscreteMeasure> cache_;
};

MeasureEstimate harmonic_measure(const BoundarySet& gamma, const MatrixField& A, const Vec& X,
                                 const SurfaceSet& E, const MeasureConfig& cfg);

struct NondegeneracyReport {
  double min_inside = kInf;   // min over X in Omega cap B/2 of omega^X(B)
  double min_outside = kInf;  // min over Y outside 2B of omega^Y(Gamma minus B)
  int samples = 0;
};
NondegeneracyReport nondegeneracy_check(MeasureSolver& s, const Vec& x, double r, int samples, std::uint64_t seed);

struct RatioReport {
  double max_ratio = 0.0;
  double min_ratio = kInf;
  double constant = 0.0;  // max(max_ratio, 1 / min_ratio)
  std::vector<double> ratios;
};
/// max over poles of omega^X(2B) / omega^X(B).
RatioReport doubling_check(MeasureSolver& s, const Vec& x, double r, const std::vector<Vec>& poles);
/// [omega^X(E) / omega^X(B)] / omega^{A_B}(E) over the sets.
RatioReport change_of_pole_check(MeasureSolver& s, const Vec& x, double r, const std::vector<SurfaceSet>& sets,
                                 const Vec& X);
/// omega^X(B) / (r^{1-d} g(X, A_B)) over the poles.
RatioReport green_measure_compare(MeasureSolver& s, const Vec& x, double r, const std::vector<Vec>& poles);

struct AinftyPoint {
  std::size_t ball = 0;
  std::string set_id;
  double omega = 0.0;
  double fraction = 0.0;
};
struct AinftyReport {
  std::vector<AinftyPoint> points;
  std::vector<double> thresholds;
  std::vector<double> envelope;  // eps(delta) = max fraction among sets with omega < delta
  int skipped = 0;
  double at(double delta) const;
};
struct ProbeBall {
  Vec center;
  double radius;
};
/// Random unions of resolved sub-balls of each B with sigma fractions spread over [0.01, 0.9].
std::vector<SurfaceSet> random_subsets(const MeasureSolver& s, const ProbeBall& B, int count, std::mt19937_64& rng,
                                       int* skipped = nullptr);
AinftyReport ainfty_probe(MeasureSolver& s, const std::vector<ProbeBall>& balls, int sets_per_ball,
                          const std::vector<double>& thresholds, std::uint64_t seed);

struct ComparabilityReport {
  double constant = 0.0;
  double R = 0.0;
  std::vector<double> lower;  // sigma / (R^d omega)
  std::vector<double> upper;  // R^d omega / sigma
};
/// Requires n = d + 2 + alpha (throws Precondition otherwise).
ComparabilityReport comparability_check(MeasureSolver& s, double alpha, const Vec& X,
                                        const std::vector<SurfaceSet>& sets);

}  // namespace lowdim
