#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lowdim {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kPi = 3.14159265358979323846;

/// Failure categories. The CLI maps them onto exit codes.
enum class ErrorKind {
  Dimension,      // d >= n-1, wrong ambient dimension, ...
  Config,         // malformed descriptor or config
  Budget,         // node count / memory budget exceeded
  Accuracy,       // evaluation point too close to the boundary for the rule
  Convergence,    // iterative solver did not converge
  Domain,         // empty intersection, point on the boundary, ...
  Precondition,   // caller violated an operation precondition
  NonElliptic,    // coefficient field failed an ellipticity sample
  Degenerate,     // numerically zero denominator
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Axis-aligned box; used both for parameter windows in R^d and ambient boxes in R^n.
struct Box {
  Vec lo;
  Vec hi;

  Box() = default;
  Box(Vec lo_, Vec hi_);
  static Box cube(int dim, double lo, double hi);

  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(const Vec& x) const;
  Vec center() const { return 0.5 * (lo + hi); }
  Vec extent() const { return hi - lo; }
  /// Distance from x (inside) to the complement; negative when x lies outside.
  double inner_margin(const Vec& x) const;
};

/// 64-bit FNV-1a, used for config and boundary-data fingerprints.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 1469598103934665603ULL);
std::uint64_t hash_doubles(const double* data, std::size_t count,
                           std::uint64_t seed = 1469598103934665603ULL);

/// Volume of the unit ball in R^k (k may be 0).
double unit_ball_volume(int k);
/// Surface area of the unit sphere S^{k-1} in R^k.
double unit_sphere_area(int k);

}  // namespace lowdim
