#pragma once

#include "lowdim/grid.hpp"
#include "lowdim/operator_fields.hpp"

#include <Eigen/Sparse>

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace lowdim {

struct SolverCache;

/// Finite-volume discretization of -div(A grad u) on a graded grid.
class DiscreteProblem {
 public:
  std::shared_ptr<const Grid> grid;
  /// Full system; band and shell rows are identity rows.
  Eigen::SparseMatrix<double, Eigen::RowMajor> K;
  bool symmetric = true;
  bool scalar = true;
  std::string operator_description;

  std::vector<std::ptrdiff_t> unknown_of;  // node -> unknown index, -1 for Dirichlet nodes
  std::vector<std::size_t> interior_nodes;
  std::vector<std::ptrdiff_t> boundary_of;  // node -> Dirichlet index, -1 for unknowns
  std::vector<std::size_t> boundary_nodes;
  Eigen::SparseMatrix<double> KII;
  Eigen::SparseMatrix<double> KIB;

  mutable std::shared_ptr<SolverCache> cache;
  mutable std::shared_ptr<std::mutex> cache_mutex = std::make_shared<std::mutex>();
};

struct AssemblyOptions {
  /// For costly scalar fields: evaluate A/w once per node and interpolate it multilinearly,
  /// multiplying by the exact weight w at the face sample points.
  bool interpolate_reduced = false;
};

/// Throws Domain if a face coefficient is not finite (callers may re-jitter the grid).
DiscreteProblem assemble(const MatrixField& A, std::shared_ptr<const Grid> grid,
                         const AssemblyOptions& opts = {});

/// Rebuilds the grid with jitter h_min/7 once if the first assembly meets an infinite face.
DiscreteProblem build_and_assemble(const MatrixField& A, const Box& box, const BoundarySet& gamma,
                                   GridOptions opts, const AssemblyOptions& aopts = {});

class SolutionField {
 public:
  SolutionField() = default;
  SolutionField(std::shared_ptr<const Grid> grid, std::vector<double> values);

  const Grid& grid() const { return *grid_; }
  std::shared_ptr<const Grid> grid_ptr() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  double value(std::size_t node) const { return values_[node]; }

  /// Multilinear interpolation.
  double at(const Vec& X) const;
  /// Gradient of the multilinear interpolant.
  Vec gradient(const Vec& X) const;
  /// Centered differences at a node (one-sided on the outer shell).
  Vec node_gradient(std::size_t node) const;

  std::string operator_description;
  std::uint64_t data_hash = 0;
  int iterations = 0;
  double residual = 0.0;
  double max_principle_violation = 0.0;

 private:
  std::shared_ptr<const Grid> grid_;
  std::vector<double> values_;
};

enum class SolverMethod { Auto, Iterative, Direct };

struct SolverOptions {
  double tolerance = 1e-10;
  int max_iterations = 20000;
  SolverMethod method = SolverMethod::Auto;
  /// Auto switches to a direct factorization below this many unknowns.
  std::size_t direct_limit = 30000;
  /// Maximum-principle violations above this (relative to the data range) throw.
  double max_principle_tolerance = 1e-6;
};

/// Dirichlet solve; `dirichlet` holds one value per grid node (only band and shell entries are read).
SolutionField solve_dirichlet(const DiscreteProblem& problem, const std::vector<double>& dirichlet,
                              const SolverOptions& opts = {});

/// Convenience: band values from g at the node's foot on Gamma, shell values from `shell`.
std::vector<double> dirichlet_data(const Grid& grid, const std::function<double(const Vec&)>& on_gamma,
                                   const std::function<double(const Vec&)>& on_shell);

/// Discrete Green function with a unit integrated source at interior node Y.
SolutionField green_function(const DiscreteProblem& problem, std::size_t Y, const SolverOptions& opts = {});

/// Weights mu over Dirichlet nodes with u(X) = sum_j mu_j g_j for every Dirichlet data g.
struct DiscreteMeasure {
  std::vector<std::size_t> nodes;
  std::vector<double> weights;
  double total() const;
  double apply(const std::vector<double>& node_values) const;
};
DiscreteMeasure measure_at(const DiscreteProblem& problem, const Vec& X, const SolverOptions& opts = {});

/// max over test nodes of |int A grad u . grad phi_i| / (||phi_i||_A ||u||_A) on supp phi_i,
/// phi_i the multilinear hat function of node i.
double weak_residual(const SolutionField& u, const MatrixField& A, const std::vector<std::size_t>& test_nodes);
/// Interior nodes whose hat support stays away from Dirichlet nodes and the shell.
std::vector<std::size_t> default_test_nodes(const Grid& grid, std::size_t max_count, std::uint64_t seed);

/// Samples a closed-form function at every node.
SolutionField sample_field(std::shared_ptr<const Grid> grid, const std::function<double(const Vec&)>& f);

}  // namespace lowdim
