#include "lowdim/model_oracle.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace lowdim {

namespace {

template <class F>
double gk(F f, double a, double b, double tol) {
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, tol);
}

}  // namespace

double half_space_poisson(int d, const Vec& z, double s) {
  const double cd = boost::math::tgamma(0.5 * (d + 1)) / std::pow(kPi, 0.5 * (d + 1));
  return cd * s / std::pow(z.squaredNorm() + s * s, 0.5 * (d + 1));
}

double model_oracle(const BoundaryData& g, const Vec& X, double tol) {
  const int d = g.d;
  const int n = static_cast<int>(X.size());
  if (n < d + 2) throw Error(ErrorKind::Dimension, "oracle point needs n >= d + 2");
  const Vec x = X.head(d);
  const double s = X.tail(n - d).norm();
  if (s == 0.0) {
    if (d == 1)
      for (double b : g.breakpoints)
        if (x[0] == b) throw Error(ErrorKind::Domain, "oracle evaluated on Gamma at a discontinuity of g");
    return g.g(x);
  }
  if (d == 1) {
    // y = x + s tan(theta): P_s dy = dtheta / pi.
    std::vector<double> cuts{-kPi / 2};
    for (double b : g.breakpoints) cuts.push_back(std::atan((b - x[0]) / s));
    cuts.push_back(kPi / 2);
    std::sort(cuts.begin(), cuts.end());
    Vec y(1);
    auto f = [&](double th) {
      y[0] = x[0] + s * std::tan(th);
      return g.g(y);
    };
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
      if (cuts[i + 1] > cuts[i]) total += gk(f, cuts[i], cuts[i + 1], tol);
    return total / kPi;
  }
  if (d == 2) {
    // Polar coordinates around x with rho = s tan(theta): P_s rho drho dphi = sin(theta) dtheta dphi / (2 pi).
    Vec y(2);
    auto inner = [&](double phi) {
      auto f = [&](double th) {
        const double rho = s * std::tan(th);
        y[0] = x[0] + rho * std::cos(phi);
        y[1] = x[1] + rho * std::sin(phi);
        return std::sin(th) * g.g(y);
      };
      return gk(f, 0.0, kPi / 2, tol);
    };
    return gk(inner, 0.0, 2.0 * kPi, tol) / (2.0 * kPi);
  }
  throw Error(ErrorKind::Dimension, "model oracle supports d in {1, 2}");
}

BoundaryData constant_data(int d, double c) {
  BoundaryData b;
  b.d = d;
  b.g = [c](const Vec&) { return c; };
  b.sup_norm = std::abs(c);
  std::ostringstream os;
  os << "constant " << c;
  b.description = os.str();
  return b;
}

BoundaryData linear_data(int d, int axis) {
  BoundaryData b;
  b.d = d;
  b.g = [axis](const Vec& x) { return x[axis]; };
  b.sup_norm = kInf;
  b.description = "linear x" + std::to_string(axis + 1);
  return b;
}

BoundaryData interval_indicator(double a, double c) {
  BoundaryData b;
  b.d = 1;
  b.g = [a, c](const Vec& x) { return x[0] >= a && x[0] <= c ? 1.0 : 0.0; };
  b.breakpoints = {a, c};
  b.sup_norm = 1.0;
  std::ostringstream os;
  os << "indicator [" << a << ", " << c << "]";
  b.description = os.str();
  return b;
}

std::vector<BoundaryData> oracle_battery(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto uni = [&](double a, double b) { return a + (b - a) * u01(rng); };
  std::vector<BoundaryData> out;
  for (int i = 0; i < count; ++i) {
    BoundaryData b;
    b.d = 1;
    std::ostringstream os;
    os.precision(4);
    switch (i % 3) {
      case 0: {
        const double a1 = uni(-1, 1), c1 = uni(-1, 1), w1 = uni(0.6, 1.2);
        const double a2 = uni(-1, 1), c2 = uni(-1, 1), w2 = uni(0.6, 1.2);
        b.g = [=](const Vec& x) {
          return a1 * std::exp(-std::pow((x[0] - c1) / w1, 2)) + a2 * std::exp(-std::pow((x[0] - c2) / w2, 2));
        };
        os << "gauss mixture (" << a1 << "," << c1 << "," << w1 << ")+(" << a2 << "," << c2 << "," << w2 << ")";
        break;
      }
      case 1: {
        const double a = uni(0.5, 1.0), c = uni(-0.8, 0.8), w = uni(0.6, 1.2);
        b.g = [=](const Vec& x) { return a * std::tanh((x[0] - c) / w); };
        os << "smoothed step " << a << " tanh((x-" << c << ")/" << w << ")";
        break;
      }
      default: {
        const double k = uni(0.5, 1.5), ph = uni(0, 2 * kPi), w = uni(0.8, 1.5);
        b.g = [=](const Vec& x) { return std::cos(k * x[0] + ph) * std::exp(-std::pow(x[0] / w, 2)); };
        os << "modulated bump cos(" << k << "x+" << ph << ") exp(-(x/" << w << ")^2)";
        break;
      }
    }
    double sup = 0.0;
    Vec y(1);
    for (int j = 0; j <= 4000; ++j) {
      y[0] = -10.0 + 20.0 * j / 4000.0;
      sup = std::max(sup, std::abs(b.g(y)));
    }
    b.sup_norm = sup;
    b.description = os.str();
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace lowdim
