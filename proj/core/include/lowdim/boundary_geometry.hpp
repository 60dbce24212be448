#pragma once

#include "lowdim/common.hpp"

#include <nlohmann/json_fwd.hpp>

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace lowdim {

/// Closed-form graph map phi: R^d -> R^{codim} with its Jacobian (codim x d).
struct GraphFunction {
  int d = 1;
  int codim = 1;
  std::function<Vec(const Vec&)> value;
  std::function<Mat(const Vec&)> jacobian;
  /// Optional second derivative of component c in direction (i, j); used by mollified frames.
  std::function<double(const Vec&, int c, int i, int j)> hessian;
  double lipschitz = 0.0;
  std::string description;
};

GraphFunction affine_graph(const Vec& offset, const Mat& slope);
/// phi_0(x) = amplitude * sin(frequency * x_0 + phase), other components zero.
GraphFunction sine_graph(int d, int codim, double amplitude, double frequency = 1.0,
                         double phase = 0.0);
/// phi_0(x) = eps * |x|.
GraphFunction cone_graph(int d, int codim, double eps);
/// phi_0(x) = amplitude * exp(-|x - center|^2 / width^2).
GraphFunction bump_graph(int d, int codim, double amplitude, double width, const Vec& center);
/// Piecewise-linear phi_0 through the given knots (d = 1), constant slope extension.
GraphFunction piecewise_linear_graph(int codim, std::vector<double> knots,
                                     std::vector<double> values);

struct SimilarityMap {
  double ratio = 0.5;  // x -> ratio * x + offset
  Vec offset;
};

struct AffinePlane {};
struct LipschitzGraph {
  GraphFunction phi;
};
struct SelfSimilarCantor {
  std::vector<SimilarityMap> maps;
};

/// A d-dimensional Ahlfors regular set in R^n.
class BoundarySet {
 public:
  using Kind = std::variant<AffinePlane, LipschitzGraph, SelfSimilarCantor>;

  static BoundarySet plane(int d, int n);
  static BoundarySet graph(GraphFunction phi, int n);
  /// Similarity dimension is solved from sum r_i^d = 1. If `declared_dim` is given it
  /// must agree within 1e-12.
  static BoundarySet cantor(int n, std::vector<SimilarityMap> maps,
                            std::optional<double> declared_dim = std::nullopt);
  /// Four maps of ratio 1/4 at the corners of the unit square in the (x1, x2) plane.
  static BoundarySet four_corner_cantor(int n);
  /// Middle-thirds Cantor set on the first axis.
  static BoundarySet middle_thirds(int n);

  int n() const { return n_; }
  double d() const { return d_; }
  /// Integer dimension for planes and graphs (the parameter-space dimension).
  int param_dim() const;
  bool bounded() const { return std::holds_alternative<SelfSimilarCantor>(kind_); }
  double diameter() const { return diameter_; }
  const Kind& kind() const { return kind_; }
  bool is_plane() const { return std::holds_alternative<AffinePlane>(kind_); }
  bool is_graph() const { return std::holds_alternative<LipschitzGraph>(kind_); }
  bool is_cantor() const { return bounded(); }
  const GraphFunction& graph_function() const;
  const std::vector<SimilarityMap>& maps() const;
  /// Lipschitz constant of the graph (0 for planes).
  double lipschitz() const;
  std::string describe() const;

  /// Point of Gamma above parameter x (planes and graphs).
  Vec lift(const Vec& x) const;
  /// Tangent frame columns [I; Dphi(x)] (n x d), planes and graphs.
  Mat tangent_frame(const Vec& x) const;

  /// Cantor helpers: fixed point of map 0, and a ball (center, radius) containing the set.
  Vec cantor_anchor() const { return anchor_; }
  Vec hull_center() const { return hull_center_; }
  double hull_radius() const { return hull_radius_; }

 private:
  BoundarySet() = default;
  Kind kind_;
  int n_ = 0;
  double d_ = 0.0;
  double diameter_ = kInf;
  Vec anchor_, hull_center_;
  double hull_radius_ = 0.0;
};

/// Builds a boundary from a JSON descriptor {"kind": ..., ...}. See docs/formats.md.
BoundarySet make_boundary(const nlohmann::json& spec);

/// Surface-measure quadrature. Nodes are stored row-major (size() x n).
struct QuadratureRule {
  int n = 0;
  double d = 0.0;
  int level = 0;
  double covering_radius = 0.0;
  /// Parameter box (planes/graphs) or ambient box (Cantor sets).
  Box window;
  std::vector<double> nodes;
  std::vector<double> weights;
  /// Parameter coordinates (size() x d) for planes and graphs; empty for Cantor sets.
  std::vector<double> params;
  int param_dim = 0;

  std::size_t size() const { return weights.size(); }
  std::span<const double> node(std::size_t i) const {
    return {nodes.data() + i * static_cast<std::size_t>(n), static_cast<std::size_t>(n)};
  }
  Vec node_vec(std::size_t i) const;
  Vec param_vec(std::size_t i) const;
  double total_weight() const;
  /// Sum of weights of nodes in the closed ball B(x, r).
  double ball_mass(const Vec& x, double r) const;
};

inline constexpr std::size_t kDefaultNodeBudget = 4'000'000;

QuadratureRule sigma_quadrature(const BoundarySet& gamma, int level, const Box& window,
                                std::size_t max_nodes = kDefaultNodeBudget);
void write_quadrature_csv(const QuadratureRule& rule, std::ostream& out);

struct DistanceResult {
  double value = 0.0;
  double error = 0.0;  // 0 for planes; Newton tolerance for graphs; h_L for Cantor sets
  Vec foot;            // nearest point found on Gamma (node for Cantor sets)
};

/// Default tree depth used for Cantor distances when no rule is supplied.
inline constexpr int kCantorDistanceLevel = 14;

DistanceResult distance(const BoundarySet& gamma, const Vec& X, int cantor_level = kCantorDistanceLevel);
inline double delta(const BoundarySet& gamma, const Vec& X) { return distance(gamma, X).value; }

/// Covering radius of the level-L Cantor node set.
double cantor_covering_radius(const BoundarySet& gamma, int level);

struct ArReport {
  double c0_estimate = 0.0;
  Vec worst_x;
  double worst_r = 0.0;
  int trials = 0;
};

ArReport verify_ar(const BoundarySet& gamma, const QuadratureRule& rule, int trials,
                   std::uint64_t seed);

struct CorkscrewResult {
  Vec point;
  double delta = 0.0;
  double c1 = 0.0;  // r / delta(A)
};

/// Directions scanned by the corkscrew search at boundary point x.
std::vector<Vec> corkscrew_directions(const BoundarySet& gamma, const Vec& x);
CorkscrewResult corkscrew(const BoundarySet& gamma, const Vec& x, double r);

struct Chain {
  std::vector<Vec> points;
  std::vector<double> deltas;
  std::vector<double> ratios;  // |Z_{i+1} - Z_i| / delta(Z_i)
  double min_delta_over_r = 0.0;
  double max_delta_over_r = 0.0;
  double lambda = 0.0;
  std::size_t length() const { return points.empty() ? 0 : points.size() - 1; }
};

Chain harnack_chain(const BoundarySet& gamma, const Vec& X, const Vec& Y);
/// Checks the stored chain invariants; returns an empty string when valid.
std::string check_chain(const Chain& chain, const Vec& X, const Vec& Y);

}  // namespace lowdim
