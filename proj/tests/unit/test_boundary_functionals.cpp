#include "lowdim/boundary_functionals.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace lowdim;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

std::shared_ptr<const Grid> flat_grid() {
  GridOptions o;
  o.h_min = 1.0 / 8;
  o.h_max = 0.25;
  o.band_width = 1.0 / 16;
  return std::make_shared<const Grid>(
      Grid::build(Box(vec({-2, -1.5, -1.5}), vec({2, 1.5, 1.5})), BoundarySet::plane(1, 3), o));
}

SolutionField smooth_field(std::shared_ptr<const Grid> g) {
  return sample_field(g, [](const Vec& X) { return std::sin(X[0]) * std::exp(-X.tail(2).norm()) + 0.3; });
}

}  // namespace

TEST(BoundaryFunctionals, CutoffSemantics) {
  const Cutoff chi = Cutoff::local(0.5, Vec::Zero(1), 1.0, [](const Vec& x) { return 0.5 * std::abs(x[0]); });
  EXPECT_TRUE(chi(vec({0.0}), 0.3));
  EXPECT_FALSE(chi(vec({0.0}), 0.6));
  EXPECT_FALSE(chi(vec({1.2}), 0.3));
  EXPECT_FALSE(chi(vec({0.8}), 0.3));  // below the saw-tooth e(x) = 0.4
  const Cutoff big = chi.doubled();
  for (double x = -2.0; x <= 2.0; x += 0.05)
    for (double s = 0.0; s <= 1.5; s += 0.05)
      if (chi(vec({x}), s)) EXPECT_TRUE(big(vec({x}), s));
}

TEST(BoundaryFunctionals, SawtoothIsLipschitz) {
  const auto e = random_sawtooth(Vec::Zero(1), 1.0, 6, 1.0, 9);
  for (double x = -1.0; x < 1.0; x += 0.01) EXPECT_LE(std::abs(e(vec({x + 0.01})) - e(vec({x}))), 0.01 + 1e-12);
}

TEST(BoundaryFunctionals, LatticeWeights) {
  const auto pts = boundary_lattice(Vec::Zero(1), 1.0, 0.1);
  EXPECT_NEAR(pts.weight * static_cast<double>(pts.points.size()), 2.0, 1e-12);
}

TEST(BoundaryFunctionals, ConstantsHaveZeroSquareFunction) {
  const auto g = flat_grid();
  const auto u = sample_field(g, [](const Vec&) { return -2.5; });
  const auto xs = boundary_lattice(Vec::Zero(1), 0.5, 0.25);
  const auto N = nontangential_max(u, xs, Cutoff::local(1.0, Vec::Zero(1), 1.0));
  for (std::size_t i = 0; i < xs.points.size(); ++i) EXPECT_EQ(N.values[i], 2.5);
  const CellTable cells(u);
  for (double p : {1.5, 2.0, 3.0}) {
    const auto S = square_function(cells, p, xs, Cutoff::everywhere());
    for (double v : S.values) EXPECT_EQ(v, 0.0);
  }
}

TEST(BoundaryFunctionals, ExactHomogeneity) {
  const auto g = flat_grid();
  const auto u = smooth_field(g);
  const auto xs = boundary_lattice(Vec::Zero(1), 0.5, 0.25);
  const Cutoff chi = Cutoff::local(1.0, Vec::Zero(1), 1.0);
  const CellTable cu(u);
  for (double lambda : {2.0, -1.0, 0.25}) {
    std::vector<double> v = u.values();
    for (double& x : v) x *= lambda;
    const SolutionField w(g, v);
    const CellTable cw(w);
    const auto Nu = nontangential_max(u, xs, chi), Nw = nontangential_max(w, xs, chi);
    const auto Su = square_function(cu, 2.0, xs, chi), Sw = square_function(cw, 2.0, xs, chi);
    for (std::size_t i = 0; i < xs.points.size(); ++i) {
      EXPECT_EQ(Nw.values[i], std::abs(lambda) * Nu.values[i]);
      EXPECT_EQ(Sw.values[i], std::abs(lambda) * Su.values[i]);
    }
  }
}

TEST(BoundaryFunctionals, MonotoneInCutoff) {
  const auto g = flat_grid();
  const auto u = smooth_field(g);
  const CellTable cells(u);
  const auto xs = boundary_lattice(Vec::Zero(1), 0.5, 0.125);
  const Cutoff small = Cutoff::local(0.5, Vec::Zero(1), 0.75, random_sawtooth(Vec::Zero(1), 0.75, 3, 0.5, 1));
  for (double p : {1.5, 3.0}) {
    const auto a = square_function(cells, p, xs, small), b = square_function(cells, p, xs, small.doubled());
    for (std::size_t i = 0; i < xs.points.size(); ++i) EXPECT_LE(a.values[i], b.values[i]);
  }
  const auto na = nontangential_max(u, xs, small), nb = nontangential_max(u, xs, Cutoff::everywhere());
  for (std::size_t i = 0; i < xs.points.size(); ++i) EXPECT_LE(na.values[i], nb.values[i]);
}

TEST(BoundaryFunctionals, PEllipticityOfModelEqualsPMinusOne) {
  const auto g = flat_grid();
  const std::vector<SolutionField> bank{smooth_field(g)};
  for (double p : {1.5, 3.0}) {
    const auto rep = p_ellipticity_check(model_field(1, 3), bank, {Cutoff::local(1.0, Vec::Zero(1), 1.0)}, p);
    EXPECT_NEAR(rep.min_ratio, p - 1.0, 1e-9);
    EXPECT_NEAR(rep.max_ratio, p - 1.0, 1e-9);
  }
}

TEST(BoundaryFunctionals, BmoOfLinearFunction) {
  // avg over [-1, 1] of x^2 is 1/3.
  const double b = bmo_norm([](const Vec& x) { return x[0]; }, {{Vec::Zero(1), 1.0}});
  EXPECT_NEAR(b, 1.0 / std::sqrt(3.0), 1e-4);
  EXPECT_NEAR(bmo_norm([](const Vec&) { return 4.0; }, {{Vec::Zero(1), 1.0}}), 0.0, 1e-14);
}

TEST(BoundaryFunctionals, CheckCsvFormat) {
  std::ostringstream out;
  write_check_csv({{"a", 1.0, 2.0, 0.5}}, "abc", out);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "check_id,lhs,rhs,ratio,config_hash");
  EXPECT_NE(out.str().find("a,1,2,0.5,abc"), std::string::npos);
}
