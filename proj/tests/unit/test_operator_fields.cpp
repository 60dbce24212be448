#include "lowdim/operator_fields.hpp"

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

}  // namespace

TEST(OperatorFields, ModelWeight) {
  EXPECT_NEAR(model_weight(1, vec({7.0, 3.0, 4.0})), 1.0 / 5.0, 1e-15);
  const auto w = weight_w(BoundarySet::plane(1, 4), WeightMode::Euclidean);
  EXPECT_NEAR(w(vec({0.0, 0.0, 2.0, 0.0})), 0.25, 1e-15);
}

TEST(OperatorFields, BallMeasureFlat) {
  // d = 1, n = 3: m(B(0, r)) = int_{-r}^{r} 2 pi sqrt(r^2 - x^2) dx = pi^2 r^2.
  const auto g = BoundarySet::plane(1, 3);
  const auto w = weight_w(g, WeightMode::Euclidean);
  const double r = 0.7;
  EXPECT_NEAR(measure_m_ball(g, w, Vec::Zero(3), r, 4).value, kPi * kPi * r * r, 0.02 * kPi * kPi * r * r);
}

TEST(OperatorFields, LiftOfIdentityIsModel) {
  const auto lifted = lift_codim1(constant_half_space_field(Mat::Identity(2, 2)), 4);
  const auto model = model_field(1, 4);
  const Vec X = vec({0.3, 0.2, -0.5, 0.1});
  EXPECT_LT((lifted(X) - model(X)).norm(), 1e-13);
}

TEST(OperatorFields, EllipticityOfModel) {
  const auto g = BoundarySet::plane(1, 3);
  const auto rep = ellipticity_constants(model_field(1, 3), box_sampler(g, Box::cube(3, -1, 1), 0.05), 200, 1);
  EXPECT_NEAR(rep.upper, 1.0, 1e-9);
  EXPECT_NEAR(rep.lower_inv, 1.0, 1e-9);
}

TEST(OperatorFields, DetectsNonEllipticField) {
  const auto g = BoundarySet::plane(1, 3);
  Mat A = Mat::Identity(3, 3);
  A(1, 1) = -1.0;
  try {
    ellipticity_constants(constant_field(A), box_sampler(g, Box::cube(3, -1, 1), 0.05), 50, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonElliptic);
  }
}

TEST(OperatorFields, IdentityChangeOfVariables) {
  const auto A = model_field(1, 3);
  const auto Ar = conjugate(A, cov_identity(3, 1));
  const Vec X = vec({0.1, 0.4, -0.2});
  EXPECT_LT((Ar(X) - A(X)).norm(), 1e-12);
}

TEST(OperatorFields, FrameRotationIsOrthogonal) {
  Mat dphi(2, 1);
  dphi << 0.3, -0.2;
  const Mat Q = frame_rotation(dphi, 3);
  EXPECT_LT((Q.transpose() * Q - Mat::Identity(3, 3)).norm(), 1e-12);
}

TEST(OperatorFields, RhoFullIsBiLipschitz) {
  const auto phi = sine_graph(1, 2, 0.05);
  const auto b = estimate_bilipschitz(cov_rho_full(phi, 3), Box::cube(3, -1, 1), 200, 3);
  EXPECT_GT(b.lower, 0.8);
  EXPECT_LT(b.upper, 1.25);
}

TEST(OperatorFields, RhoFullMapsGammaZeroOntoGraph) {
  const auto phi = sine_graph(1, 2, 0.05);
  const auto rho = cov_rho_full(phi, 3);
  const Vec y = rho.map(vec({0.4, 0.0, 0.0}));
  EXPECT_NEAR(y[0], 0.4, 1e-12);
  EXPECT_NEAR(y[1], 0.05 * std::sin(0.4), 1e-12);
}

TEST(OperatorFields, ModelHasNoCarlesonPart) {
  const auto A = model_field(1, 3);
  const auto rep = structure_decompose([&](const Vec& X) { return A.reduced(X); }, 1, 3, {{Vec::Zero(1), 1.0}});
  EXPECT_NEAR(rep.b_min, 1.0, 1e-12);
  EXPECT_NEAR(rep.b_max, 1.0, 1e-12);
  EXPECT_NEAR(rep.grad_b3.supremum, 0.0, 1e-12);
  EXPECT_NEAR(rep.c3.supremum, 0.0, 1e-12);
  EXPECT_NEAR(rep.c4.supremum, 0.0, 1e-12);
}

TEST(OperatorFields, WhitneyCubes) {
  const auto c = whitney_cube(1, vec({0.3, 0.7, 0.0}));
  EXPECT_GT(c.side(), 0.0);
  EXPECT_LE(c.side(), 0.7);
  EXPECT_GE(c.side(), 0.7 / 16.0);
}
