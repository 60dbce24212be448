#include "lowdim/boundary_geometry.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cmath>

using namespace lowdim;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// Composite Simpson rule for the arc length of a sine graph.
double sine_arc_length(double amp, double a, double b) {
  const int m = 20000;
  const double h = (b - a) / m;
  double s = 0.0;
  for (int i = 0; i <= m; ++i) {
    const double x = a + i * h;
    const double f = std::sqrt(1.0 + amp * amp * std::cos(x) * std::cos(x));
    s += f * (i == 0 || i == m ? 1.0 : (i % 2 ? 4.0 : 2.0));
  }
  return s * h / 3.0;
}

}  // namespace

TEST(BoundaryGeometry, DimensionsOfPresets) {
  EXPECT_NEAR(BoundarySet::middle_thirds(3).d(), std::log(2.0) / std::log(3.0), 1e-14);
  EXPECT_NEAR(BoundarySet::four_corner_cantor(3).d(), 1.0, 1e-14);
  EXPECT_EQ(BoundarySet::plane(2, 5).param_dim(), 2);
}

TEST(BoundaryGeometry, RejectsCodimensionOne) {
  try {
    BoundarySet::plane(2, 3);
    FAIL() << "expected a Dimension error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Dimension);
  }
}

TEST(BoundaryGeometry, DescriptorErrorsAreConfigErrors) {
  try {
    make_boundary(nlohmann::json{{"kind", "torus"}, {"n", 3}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config);
  }
  try {
    make_boundary(nlohmann::json{{"kind", "plane"}, {"n", 3}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config);
  }
}

TEST(BoundaryGeometry, DescriptorBuildsGraph) {
  const auto g = make_boundary(nlohmann::json::parse(
      R"({"kind":"graph","n":3,"phi":{"type":"sine","amplitude":0.1,"frequency":2.0}})"));
  ASSERT_TRUE(g.is_graph());
  EXPECT_NEAR(g.lift(vec({0.3}))[1], 0.1 * std::sin(0.6), 1e-15);
  EXPECT_NEAR(g.lipschitz(), 0.2, 1e-12);
}

TEST(BoundaryGeometry, PlaneQuadratureMass) {
  const auto g = BoundarySet::plane(2, 4);
  const auto rule = sigma_quadrature(g, 5, Box::cube(2, -1.0, 1.0));
  EXPECT_NEAR(rule.total_weight(), 4.0, 1e-12);
  EXPECT_NEAR(rule.ball_mass(Vec::Zero(4), 0.5), kPi * 0.25, 0.05);
}

TEST(BoundaryGeometry, GraphQuadratureMatchesArcLength) {
  const auto g = BoundarySet::graph(sine_graph(1, 2, 0.5), 3);
  const auto rule = sigma_quadrature(g, 10, Box::cube(1, -3.0, 3.0));
  EXPECT_NEAR(rule.total_weight(), sine_arc_length(0.5, -3.0, 3.0), 1e-6);
}

TEST(BoundaryGeometry, CantorMassSplitsEvenly) {
  const auto g = BoundarySet::middle_thirds(3);
  const auto rule = sigma_quadrature(g, 8, Box(vec({-1, -1, -1}), vec({2, 1, 1})));
  double left = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i)
    if (rule.node_vec(i)[0] < 0.5) left += rule.weights[i];
  EXPECT_NEAR(left / rule.total_weight(), 0.5, 1e-12);
  // Self-similarity: sigma(B(0, r/3)) = sigma(B(0, r)) / 2.
  const double big = rule.ball_mass(Vec::Zero(3), 0.35);
  const double small = rule.ball_mass(Vec::Zero(3), 0.35 / 3.0);
  EXPECT_NEAR(small / big, 0.5, 1e-9);
}

TEST(BoundaryGeometry, Distances) {
  EXPECT_NEAR(delta(BoundarySet::plane(1, 3), vec({5.0, 3.0, 4.0})), 5.0, 1e-14);
  // Middle of the first gap of the Cantor set.
  EXPECT_NEAR(delta(BoundarySet::middle_thirds(3), vec({0.5, 0.0, 0.0})), 1.0 / 6.0, 1e-6);
  const auto g = BoundarySet::graph(sine_graph(1, 2, 0.05), 3);
  const Vec X = vec({0.4, 0.05 * std::sin(0.4) + 0.3, 0.0});
  const double d = delta(g, X);
  EXPECT_LE(d, 0.3 + 1e-12);
  EXPECT_GE(d, 0.3 / std::sqrt(1.0 + 0.05 * 0.05) - 1e-9);
}

TEST(BoundaryGeometry, CorkscrewPoint) {
  const auto g = BoundarySet::graph(sine_graph(1, 2, 0.05), 3);
  const Vec x = g.lift(vec({0.2}));
  const auto c = corkscrew(g, x, 0.5);
  EXPECT_LE((c.point - x).norm(), 0.5 + 1e-12);
  EXPECT_GE(c.delta, 0.5 / 4.0);
}

TEST(BoundaryGeometry, HarnackChainIsValid) {
  const auto g = BoundarySet::plane(1, 3);
  const Vec X = vec({0.0, 0.01, 0.0});
  const Vec Y = vec({1.0, 0.0, 0.02});
  const Chain ch = harnack_chain(g, X, Y);
  EXPECT_EQ(check_chain(ch, X, Y), "");
  EXPECT_GT(ch.length(), 0U);
}

TEST(BoundaryGeometry, AhlforsRegularity) {
  const auto g = BoundarySet::middle_thirds(3);
  const auto rule = sigma_quadrature(g, 10, Box(vec({-1, -1, -1}), vec({2, 1, 1})));
  const ArReport ar = verify_ar(g, rule, 50, 1);
  EXPECT_GE(ar.c0_estimate, 1.0);
  EXPECT_LT(ar.c0_estimate, 10.0);
}

TEST(BoundaryGeometry, CantorDistanceAgainstBruteForce) {
  // Level-8 left endpoints of the middle-thirds set, enumerated directly.
  std::vector<double> ends{0.0};
  double len = 1.0;
  for (int k = 0; k < 8; ++k) {
    len /= 3.0;
    const std::size_t m = ends.size();
    for (std::size_t i = 0; i < m; ++i) ends.push_back(ends[i] + 2.0 * len);
  }
  const auto g = BoundarySet::middle_thirds(3);
  for (const Vec& X : {vec({0.318, -0.001, -0.009}), vec({0.9, 0.05, 0.0}), vec({0.45, 0.0, 0.1})}) {
    double best = kInf;
    for (double e : ends) best = std::min(best, std::hypot(X[0] - e, X[1], X[2]));
    EXPECT_NEAR(distance(g, X, 8).value, best, 1e-14);
  }
}
