#include "lowdim/degenerate_solver.hpp"
#include "lowdim/model_oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace lowdim;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

GridOptions small_grid(double h) {
  GridOptions o;
  o.h_min = h;
  o.h_max = 4 * h;
  o.band_width = 0.5 * h;
  return o;
}

DiscreteProblem model_problem(double h) {
  return build_and_assemble(model_field(1, 3), Box(vec({-2, -1.5, -1.5}), vec({2, 1.5, 1.5})),
                            BoundarySet::plane(1, 3), small_grid(h));
}

}  // namespace

TEST(DegenerateSolver, InteriorRowsAnnihilateConstants) {
  const auto P = model_problem(1.0 / 8);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(P.K.cols());
  const Eigen::VectorXd r = P.K * ones;
  for (std::size_t i : P.interior_nodes) {
    EXPECT_NEAR(r[static_cast<Eigen::Index>(i)], 0.0, 1e-10 * P.K.coeff(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)));
  }
}

TEST(DegenerateSolver, MMatrixSigns) {
  const auto P = model_problem(1.0 / 8);
  for (int k = 0; k < P.KII.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(P.KII, k); it; ++it) {
      if (it.row() == it.col())
        EXPECT_GT(it.value(), 0.0);
      else
        EXPECT_LE(it.value(), 0.0);
    }
}

TEST(DegenerateSolver, ReproducesConstantsAndLinearTraces) {
  const auto P = model_problem(1.0 / 8);
  const auto one = solve_dirichlet(P, dirichlet_data(*P.grid, [](const Vec&) { return 1.0; },
                                                     [](const Vec&) { return 1.0; }));
  for (double v : one.values()) EXPECT_NEAR(v, 1.0, 1e-9);
  // u = x_1 is an L_0 solution; the scheme is exact for it on a tensor grid.
  const auto lin = solve_dirichlet(P, dirichlet_data(*P.grid, [](const Vec& f) { return f[0]; },
                                                     [](const Vec& X) { return X[0]; }));
  for (std::size_t i = 0; i < P.grid->size(); ++i) EXPECT_NEAR(lin.value(i), P.grid->point(i)[0], 1e-8);
}

TEST(DegenerateSolver, PoissonExtensionOfLorentzian) {
  // Trace 1 / (1 + x^2) extends to (1 + s) / ((1 + s)^2 + x^2).
  const auto exact = [](const Vec& X) {
    const double s = X.tail(2).norm();
    return (1 + s) / ((1 + s) * (1 + s) + X[0] * X[0]);
  };
  double err[2];
  int k = 0;
  for (double h : {1.0 / 8, 1.0 / 16}) {
    const auto P = model_problem(h);
    const auto u = solve_dirichlet(P, dirichlet_data(*P.grid, [](const Vec& f) { return 1.0 / (1 + f[0] * f[0]); }, exact));
    double e = 0.0;
    for (std::size_t i : P.interior_nodes) e = std::max(e, std::abs(u.value(i) - exact(P.grid->point(i))));
    err[k++] = e;
  }
  EXPECT_LT(err[1], 0.03);
  EXPECT_LT(err[1], err[0]);
}

TEST(DegenerateSolver, MaximumPrincipleForRandomData) {
  const auto P = model_problem(1.0 / 8);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<double> data(P.grid->size(), 0.0);
  for (std::size_t j : P.boundary_nodes) data[j] = u01(rng);
  SolverOptions o;
  o.method = SolverMethod::Direct;
  const auto u = solve_dirichlet(P, data, o);
  for (double v : u.values()) {
    EXPECT_GE(v, -1e-12);
    EXPECT_LE(v, 1.0 + 1e-12);
  }
}

TEST(DegenerateSolver, MeasureIsAProbability) {
  const auto P = model_problem(1.0 / 8);
  const DiscreteMeasure mu = measure_at(P, vec({0.1, 0.5, 0.2}));
  EXPECT_NEAR(mu.total(), 1.0, 1e-8);
  for (double w : mu.weights) EXPECT_GE(w, -1e-12);
}

TEST(DegenerateSolver, GreenFunctionPositiveAndVanishesOnDirichletNodes) {
  const auto P = model_problem(1.0 / 8);
  const std::size_t y = P.interior_nodes[P.interior_nodes.size() / 3];
  const auto G = green_function(P, y);
  for (std::size_t j : P.boundary_nodes) EXPECT_EQ(G.value(j), 0.0);
  for (std::size_t i : P.interior_nodes) EXPECT_GT(G.value(i), 0.0);
}

TEST(DegenerateSolver, NodeBudget) {
  GridOptions o = small_grid(1.0 / 64);
  o.max_nodes = 1000;
  try {
    build_and_assemble(model_field(1, 3), Box::cube(3, -1, 1), BoundarySet::plane(1, 3), o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Budget);
  }
}

TEST(ModelOracle, HalfPlanePoisson) {
  // Interval indicator: (1/pi)(atan((b - x)/s) - atan((a - x)/s)).
  const auto g = interval_indicator(-1.0, 1.0);
  EXPECT_NEAR(model_oracle(g, vec({0.0, 1.0, 0.0})), 0.5, 1e-8);
  EXPECT_NEAR(model_oracle(g, vec({2.0, 0.0, 0.5})),
              (std::atan(-1.0 / 0.5) - std::atan(-3.0 / 0.5)) / kPi, 1e-8);
  EXPECT_NEAR(model_oracle(constant_data(1, 3.0), vec({0.4, 0.3, 0.1})), 3.0, 1e-8);
  EXPECT_NEAR(model_oracle(linear_data(1, 0), vec({0.4, 0.3, 0.1})), 0.4, 1e-8);
}

TEST(ModelOracle, BatteryIsDeterministic) {
  const auto a = oracle_battery(20, 7), b = oracle_battery(20, 7);
  ASSERT_EQ(a.size(), 20U);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i](vec({0.3})), b[i](vec({0.3})));
}
