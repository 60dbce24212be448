#pragma once

#include "lowdim/boundary_geometry.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

namespace lowdim {

enum class NodeKind : std::uint8_t { Interior = 0, GammaBand = 1, OuterShell = 2 };

struct GridOptions {
  double h_max = 0.25;
  double h_min = 1.0 / 32.0;
  double grading_ratio = 1.5;
  /// Nodes with delta <= band_width are Dirichlet nodes on Gamma; 0 selects 2 h_min.
  double band_width = 0.0;
  std::size_t max_nodes = 3'000'000;
  /// Offset of the fine zone on axes where Gamma projects to a point, in units of h_min.
  double jitter = 0.0;
  /// Optional ambient box limiting where axes are refined to h_min (projections are clipped to it).
  std::optional<Box> focus;
};

/// Tensor-product grid over a box, graded toward the projections of Gamma on each axis.
class Grid {
 public:
  static Grid build(const Box& box, const BoundarySet& gamma, const GridOptions& opts);
  static Grid from_axes(std::vector<std::vector<double>> axes, const BoundarySet& gamma,
                        double band_width);

  int dim() const { return static_cast<int>(axes_.size()); }
  std::size_t size() const { return size_; }
  const std::vector<double>& axis(int k) const { return axes_[static_cast<std::size_t>(k)]; }
  std::size_t stride(int k) const { return strides_[static_cast<std::size_t>(k)]; }
  int index_along(std::size_t node, int k) const;
  std::size_t flatten(const std::vector<int>& multi) const;
  Vec point(std::size_t node) const;

  NodeKind kind(std::size_t node) const { return kinds_[node]; }
  double delta(std::size_t node) const { return delta_[node]; }
  /// Nearest point of Gamma found for the node (meaningful for band nodes).
  Vec foot(std::size_t node) const;
  /// Dual (control) volume of the node.
  double volume(std::size_t node) const;
  /// Width of the dual interval of node index i along axis k.
  double dual_width(int k, int i) const;

  double h_min() const { return h_min_; }
  double band_width() const { return band_width_; }
  Box box() const;
  const BoundarySet& boundary() const { return *gamma_; }
  std::size_t count(NodeKind k) const;
  std::vector<std::size_t> nodes_of(NodeKind k) const;

  struct Cell {
    std::vector<int> lower;  // lower-corner multi-index
    Vec frac;                // local coordinates in [0, 1]
    Vec width;
  };
  /// Cell containing X (clamped to the box); throws Domain outside the box.
  Cell locate(const Vec& X) const;

  /// Structured text format: header with dims and axes, then node values in lexicographic order.
  void write_structured(std::ostream& out, const std::vector<double>& values) const;
  void write_csv(std::ostream& out, const std::vector<double>& values) const;

 private:
  void classify();

  std::vector<std::vector<double>> axes_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
  std::vector<NodeKind> kinds_;
  std::vector<double> delta_;
  std::vector<double> feet_;
  std::shared_ptr<const BoundarySet> gamma_;
  double h_min_ = 0.0;
  double band_width_ = 0.0;
};

/// Graded coordinates on [lo, hi] refined to h_min on [g_lo, g_hi] (the projection of Gamma).
std::vector<double> graded_axis(double lo, double hi, double g_lo, double g_hi, double h_min,
                                double h_max, double ratio, double jitter = 0.0);

}  // namespace lowdim
