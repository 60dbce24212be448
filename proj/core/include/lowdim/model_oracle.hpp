#pragma once

#include "lowdim/common.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace lowdim {

/// Boundary data g on R^d with known discontinuities (d = 1 only).
struct BoundaryData {
  int d = 1;
  std::function<double(const Vec&)> g;
  std::vector<double> breakpoints;
  double sup_norm = 1.0;
  std::string description;

  double operator()(const Vec& x) const { return g(x); }
};

/// Half-space Poisson kernel P_s(z) = c_d s / (|z|^2 + s^2)^{(d+1)/2}.
double half_space_poisson(int d, const Vec& z, double s);

/// u(x, t) = (P_{|t|} * g)(x): the L_0 solution on R^n minus R^d with trace g. X has n >= d + 2 entries.
/// Throws Domain when t = 0 and x is a breakpoint of g.
double model_oracle(const BoundaryData& g, const Vec& X, double tol = 1e-10);

/// Smooth data family: Gaussian mixtures, smoothed steps and modulated bumps (d = 1), deterministic in the seed.
std::vector<BoundaryData> oracle_battery(int count, std::uint64_t seed);

BoundaryData constant_data(int d, double c);
BoundaryData linear_data(int d, int axis);
/// Indicator of [a, b] on R^1.
BoundaryData interval_indicator(double a, double b);

}  // namespace lowdim
