#pragma once

#include <vector>

namespace lowdim {

/// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
  std::vector<double> x;
  std::vector<double> w;
};

/// Supported orders: 1, 2, 3, 4, 5, 8, 10, 16, 20, 32.
const GaussRule& gauss_legendre(int order);

/// Rule mapped to [a, b].
GaussRule gauss_on(int order, double a, double b);

}  // namespace lowdim
