#include "lowdim/elliptic_measure.hpp"

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

// Simpson integration of the half-plane Poisson kernel s / (pi (s^2 + (y - x)^2)) over [a, b].
double poisson_interval(double a, double b, double x, double s) {
  const int m = 20000;
  const double h = (b - a) / m;
  double acc = 0.0;
  for (int i = 0; i <= m; ++i) {
    const double y = a + i * h;
    acc += (i == 0 || i == m ? 1.0 : (i % 2 ? 4.0 : 2.0)) * s / (kPi * (s * s + (y - x) * (y - x)));
  }
  return acc * h / 3.0;
}

MeasureConfig flat_config(double h) {
  MeasureConfig c;
  c.grid.h_min = h;
  c.grid.h_max = 8 * h;
  c.grid.band_width = 0.5 * h;
  c.box = Box(vec({-3, -2.5, -2.5}), vec({3, 2.5, 2.5}));
  c.shell = model_shell(1);
  return c;
}

}  // namespace

TEST(EllipticMeasure, IntervalFormula) {
  EXPECT_NEAR(model_measure_exact({{-1.0, 1.0}}, 0.0, 1.0), 0.5, 1e-15);
  EXPECT_NEAR(model_measure_exact({{-0.3, 0.9}, {2.0, 2.5}}, 0.4, 0.7),
              poisson_interval(-0.3, 0.9, 0.4, 0.7) + poisson_interval(2.0, 2.5, 0.4, 0.7), 1e-10);
  // Overlapping intervals are merged.
  EXPECT_NEAR(model_measure_exact({{-1.0, 0.5}, {0.0, 1.0}}, 0.0, 1.0), 0.5, 1e-15);
}

TEST(EllipticMeasure, DiskFormulaInThreeDimensions) {
  // Half-space R^3_+: omega^{(0, s)}(B(0, a)) = 1 - s / sqrt(s^2 + a^2).
  const auto E = SurfaceSet::ball(Vec::Zero(4), 0.8);
  const double s = 0.6;
  EXPECT_NEAR(model_measure_exact(2, Vec::Zero(2), s, E), 1.0 - s / std::sqrt(s * s + 0.64), 1e-6);
  EXPECT_NEAR(model_measure_exact(2, Vec::Zero(2), s, E.complemented()), s / std::sqrt(s * s + 0.64), 1e-6);
}

TEST(EllipticMeasure, SurfaceSetAlgebra) {
  SurfaceSet E = SurfaceSet::ball(vec({0, 0, 0}), 1.0);
  E.centers.push_back(vec({3, 0, 0}));
  E.radii.push_back(0.5);
  EXPECT_TRUE(E.contains(vec({0.9, 0, 0})));
  EXPECT_TRUE(E.contains(vec({3.4, 0, 0})));
  EXPECT_FALSE(E.contains(vec({2.0, 0, 0})));
  EXPECT_TRUE(E.complemented().contains(vec({2.0, 0, 0})));
  const auto iv = E.intervals();
  ASSERT_EQ(iv.size(), 2U);
  EXPECT_NEAR(iv[1].first, 2.5, 1e-15);
  EXPECT_TRUE(SurfaceSet::everything().contains(vec({100, 0, 0})));
}

TEST(EllipticMeasure, FlatMeasureOfUnitInterval) {
  MeasureSolver s(BoundarySet::plane(1, 3), model_field(1, 3), flat_config(1.0 / 8));
  const auto m = s.omega(vec({0, 0, 1}), SurfaceSet::ball(Vec::Zero(3), 1.0));
  EXPECT_NEAR(m.value, 0.5, 0.03);
  EXPECT_NEAR(m.sigma, 2.0, 0.1);
  const auto all = s.omega(vec({0, 0, 1}), SurfaceSet::everything());
  EXPECT_NEAR(all.value, 1.0, 1e-6);
}

TEST(EllipticMeasure, PoleInsideBandIsRejected) {
  MeasureSolver s(BoundarySet::plane(1, 3), model_field(1, 3), flat_config(1.0 / 8));
  try {
    s.measure(vec({0, 0, 0}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Domain);
  }
}

TEST(EllipticMeasure, ComparabilityNeedsMagicExponent) {
  MeasureSolver s(BoundarySet::plane(1, 3), model_field(1, 3), flat_config(1.0 / 8));
  try {
    comparability_check(s, 0.5, vec({0, 0, 1}), {SurfaceSet::ball(Vec::Zero(3), 0.5)});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Precondition);
  }
}

TEST(EllipticMeasure, RandomSubsetsStayInBall) {
  MeasureSolver s(BoundarySet::plane(1, 3), model_field(1, 3), flat_config(1.0 / 8));
  std::mt19937_64 rng(3);
  const ProbeBall B{Vec::Zero(3), 1.0};
  const auto sets = random_subsets(s, B, 10, rng);
  EXPECT_FALSE(sets.empty());
  for (const auto& E : sets) {
    for (std::size_t i = 0; i < E.centers.size(); ++i) {
      EXPECT_LE(E.centers[i].norm() + E.radii[i], 1.0 + 1e-12);
      EXPECT_GE(E.radii[i], s.resolution_radius() - 1e-12);
    }
    const double frac = s.sigma(E) / s.sigma(SurfaceSet::ball(Vec::Zero(3), 1.0));
    EXPECT_GT(frac, 0.0);
    EXPECT_LE(frac, 1.0);
  }
}
