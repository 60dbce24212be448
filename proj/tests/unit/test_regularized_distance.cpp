#include "lowdim/regularized_distance.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace lowdim;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// Flat R^d: integral of |(y, t)|^{-d-alpha} dy = pi^{d/2} Gamma(alpha/2) / Gamma((d+alpha)/2) |t|^{-alpha}.
double flat_constant(int d, double alpha) {
  return std::pow(kPi, d / 2.0) * std::tgamma(alpha / 2.0) / std::tgamma((d + alpha) / 2.0);
}

}  // namespace

TEST(RegularizedDistance, FlatClosedForm) {
  const auto g = BoundarySet::plane(1, 4);
  const double alpha = 1.0;
  const RegularizedDistance rd(g, sigma_quadrature(g, 12, Box::cube(1, -20.0, 20.0)), alpha);
  EXPECT_NEAR(flat_d_alpha_constant(1, alpha), flat_constant(1, alpha), 1e-12);
  for (double t : {0.1, 0.5, 1.3}) {
    const Vec X = vec({0.2, 0.0, t, 0.0});
    EXPECT_NEAR(rd.value(X), std::pow(flat_constant(1, alpha), -1.0 / alpha) * t, 1e-6 * t);
  }
}

TEST(RegularizedDistance, MagicResidualOnFlatSubspace) {
  const auto g = BoundarySet::plane(1, 4);
  const RegularizedDistance rd(g, sigma_quadrature(g, 12, Box::cube(1, -20.0, 20.0)), 1.0);
  for (const Vec& X : {vec({0.0, 0.3, 0.4, 0.0}), vec({1.0, -0.2, 0.1, 0.7})})
    EXPECT_LE(magic_residual(rd, X).residual, 1e-6);
}

TEST(RegularizedDistance, NonMagicExponentLeavesResidual) {
  const auto g = BoundarySet::graph(sine_graph(1, 3, 0.05), 4);
  const auto rule = sigma_quadrature(g, 11, Box::cube(1, -40.0, 40.0));
  const RegularizedDistance magic(g, rule, 1.0), other(g, rule, 0.5);
  const Vec X = vec({0.3, 0.2, 0.5, -0.1});
  EXPECT_LT(magic_residual(magic, X).residual, 1e-9);
  EXPECT_GT(magic_residual(other, X).residual, 1e-4);
}

TEST(RegularizedDistance, ComparableToDistance) {
  const auto g = BoundarySet::middle_thirds(3);
  const RegularizedDistance rd(g, sigma_quadrature(g, 9, Box(vec({-1, -1, -1}), vec({2, 1, 1}))),
                               1.0 - std::log(2.0) / std::log(3.0));
  const auto scan = comparability_scan(rd, 40, 2);
  EXPECT_GT(scan.min_ratio, 0.0);
  EXPECT_LT(scan.max_ratio / scan.min_ratio, 50.0);
}

TEST(RegularizedDistance, AccuracyGuard) {
  const auto g = BoundarySet::plane(1, 3);
  const auto rule = sigma_quadrature(g, 6, Box::cube(1, -4.0, 4.0));
  const RegularizedDistance rd(g, rule, 0.5);
  try {
    rd.jet(vec({0.0, 0.5 * rule.covering_radius, 0.0}), 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Accuracy);
  }
}

TEST(RegularizedDistance, GradientMatchesFiniteDifferences) {
  const auto g = BoundarySet::graph(sine_graph(1, 2, 0.1), 3);
  const RegularizedDistance rd(g, sigma_quadrature(g, 11, Box::cube(1, -30.0, 30.0)), 0.7);
  const Vec X = vec({0.1, 0.4, 0.3});
  const DAlphaJet j = rd.jet(X, 2);
  const double h = 1e-5;
  for (int k = 0; k < 3; ++k) {
    Vec e = Vec::Zero(3);
    e[k] = h;
    EXPECT_NEAR(j.gradient[k], (rd.value(X + e) - rd.value(X - e)) / (2 * h), 1e-6);
  }
}

TEST(RegularizedDistance, BetaOfCone) {
  const double eps = 0.2;
  const BetaNumber b = beta_infinity(cone_graph(1, 1, eps), Vec::Zero(1), 1.0);
  EXPECT_NEAR(b.value, eps / 2.0, 1e-3);
  EXPECT_NEAR(beta_infinity(affine_graph(vec({0.3}), Mat::Constant(1, 1, 0.4)), Vec::Zero(1), 1.0).value, 0.0,
              1e-10);
}
