#include "lowdim/carleson.hpp"

#include "lowdim/gauss.hpp"
#include "lowdim/operator_fields.hpp"

#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>

namespace lowdim {

void CarlesonReport::add(const Vec& center, double radius, double quotient) {
  entries.push_back({center, radius, quotient});
  supremum = std::max(supremum, quotient);
}

void write_carleson_csv(const CarlesonReport& report, std::ostream& out) {
  out << "center,radius,quotient\n" << std::setprecision(12);
  for (const auto& e : report.entries) {
    for (int k = 0; k < e.center.size(); ++k) out << (k ? " " : "") << e.center[k];
    out << "," << e.radius << "," << e.quotient << "\n";
  }
}

namespace {

struct Node {
  Vec point;  // offset (x part) or direction (theta part)
  double weight;
};

std::vector<Node> ball_nodes(int d, const Vec& c, double ell, int order) {
  const GaussRule g = gauss_on(order, -ell, ell);
  const int q = static_cast<int>(g.x.size());
  std::size_t total = 1;
  for (int k = 0; k < d; ++k) total *= static_cast<std::size_t>(q);
  std::vector<Node> out;
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rem = idx;
    Vec u(d);
    double w = 1.0;
    for (int k = 0; k < d; ++k) {
      const int i = static_cast<int>(rem % q);
      rem /= q;
      u[k] = g.x[i];
      w *= g.w[i];
    }
    if (u.norm() > ell) continue;
    out.push_back({c + u, w});
  }
  return out;
}

std::vector<Node> sphere_nodes(int k, int m) {
  std::vector<Node> out;
  if (k == 1) {
    out.push_back({Vec::Constant(1, 1.0), 1.0});
    out.push_back({Vec::Constant(1, -1.0), 1.0});
  } else if (k == 2) {
    for (int j = 0; j < m; ++j) {
      const double a = 2.0 * kPi * (j + 0.5) / m;
      Vec v(2);
      v << std::cos(a), std::sin(a);
      out.push_back({v, 2.0 * kPi / m});
    }
  } else if (k == 3) {
    const int gz = m / 2 >= 8 ? 8 : (m / 2 >= 4 ? 4 : 2);
    const GaussRule& g = gauss_legendre(gz);
    for (std::size_t i = 0; i < g.x.size(); ++i) {
      const double z = g.x[i], s = std::sqrt(1.0 - z * z);
      for (int j = 0; j < m; ++j) {
        const double a = 2.0 * kPi * (j + 0.5) / m;
        Vec v(3);
        v << s * std::cos(a), s * std::sin(a), z;
        out.push_back({v, g.w[i] * 2.0 * kPi / m});
      }
    }
  } else {
    throw Error(ErrorKind::Dimension, "Carleson integration supports n - d <= 3");
  }
  return out;
}

}  // namespace

std::vector<CarlesonReport> carleson_norms(const std::function<std::vector<double>(const Vec&)>& f,
                                           int count, int d, int n,
                                           const std::vector<CarlesonBall>& balls,
                                           const CarlesonOptions& opts) {
  const int k = n - d;
  const auto theta = sphere_nodes(k, opts.angular);
  const GaussRule& gr = gauss_legendre(opts.radial_order);
  std::vector<CarlesonReport> reps(static_cast<std::size_t>(count));
  for (auto& r : reps) r.resolution = opts.bands;
  for (const auto& ball : balls) {
    const double ell = ball.radius;
    const auto xs = ball_nodes(d, ball.center, ell, opts.x_order);
    std::vector<std::vector<double>> band(opts.bands, std::vector<double>(count, 0.0));
    Vec X(n);
    for (int j = 0; j < opts.bands; ++j) {
      const double s_hi = std::log(ell) - j * std::log(2.0);
      const double s_lo = s_hi - std::log(2.0);
      for (std::size_t q = 0; q < gr.x.size(); ++q) {
        const double s = 0.5 * (s_lo + s_hi) + 0.5 * (s_hi - s_lo) * gr.x[q];
        const double ws = 0.5 * (s_hi - s_lo) * gr.w[q];
        const double r = std::exp(s);
        for (const auto& xn : xs) {
          X.head(d) = xn.point;
          for (const auto& th : theta) {
            X.tail(k) = r * th.point;
            const std::vector<double> v = f(X);
            const double w = ws * xn.weight * th.weight;
            for (int c = 0; c < count; ++c) band[j][c] += w * v[c] * v[c];
          }
        }
      }
    }
    const double norm = std::pow(ell, d);
    for (int c = 0; c < count; ++c) {
      double sum = 0.0;
      for (int j = 0; j < opts.bands; ++j) sum += band[j][c];
      const double last = band[opts.bands - 1][c];
      const double prev = opts.bands >= 2 ? band[opts.bands - 2][c] : 0.0;
      double quotient;
      if (last == 0.0) {
        quotient = sum / norm;
      } else {
        const double q = prev > 0.0 ? last / prev : kInf;
        if (q < 0.97) {
          // Geometric continuation of the band sums below ell 2^{-bands}.
          quotient = (sum + last * q / (1.0 - q)) / norm;
        } else {
          quotient = kInf;
          reps[c].divergent = true;
          reps[c].growth_rate = std::max(reps[c].growth_rate,
                                         q >= 1.0 + 1e-9 ? q : last / (std::log(2.0) * norm));
        }
      }
      reps[c].add(ball.center, ell, quotient);
    }
  }
  return reps;
}

CarlesonReport carleson_norm(const std::function<double(const Vec&)>& f, int d, int n,
                             const std::vector<CarlesonBall>& balls, const CarlesonOptions& opts) {
  auto g = [&f](const Vec& X) { return std::vector<double>{f(X)}; };
  return carleson_norms(g, 1, d, n, balls, opts).front();
}

double WhitneyCube::side() const { return std::ldexp(1.0, k); }

WhitneyCube whitney_cube(int d, const Vec& X) {
  const int n = static_cast<int>(X.size());
  const double t = X.tail(n - d).norm();
  if (!(t > 0.0)) throw Error(ErrorKind::Domain, "Whitney cube requested on Gamma");
  const double rootn = std::sqrt(static_cast<double>(n));
  WhitneyCube q;
  q.corner.resize(static_cast<std::size_t>(n));
  for (int k = static_cast<int>(std::floor(std::log2(t))) + 1;; --k) {
    const double side = std::ldexp(1.0, k);
    double dist2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double c = std::floor(X[i] / side);
      q.corner[static_cast<std::size_t>(i)] = static_cast<long long>(c);
      if (i >= d) {
        const double lo = c * side, hi = lo + side;
        const double di = lo > 0.0 ? lo : (hi < 0.0 ? -hi : 0.0);
        dist2 += di * di;
      }
    }
    if (std::sqrt(dist2) >= rootn * side) {
      q.k = k;
      return q;
    }
  }
}

StructureReport structure_decompose(const std::function<Mat(const Vec&)>& reduced, int d, int n,
                                    const std::vector<CarlesonBall>& balls,
                                    const CarlesonOptions& opts) {
  const int m = n - d;
  StructureReport rep;
  std::map<std::pair<int, std::vector<long long>>, Mat> cache;
  const GaussRule& g2 = gauss_legendre(2);

  auto b3 = [&](const Vec& X) -> Mat {
    const WhitneyCube q = whitney_cube(d, X);
    auto key = std::make_pair(q.k, q.corner);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    const double side = q.side();
    Mat acc = Mat::Zero(m, d);
    const std::size_t total = std::size_t{1} << n;
    Vec P(n);
    for (std::size_t idx = 0; idx < total; ++idx) {
      for (int i = 0; i < n; ++i) {
        const int g = static_cast<int>((idx >> i) & 1U);
        P[i] = (static_cast<double>(q.corner[static_cast<std::size_t>(i)]) + 0.5 + 0.5 * g2.x[g]) * side;
      }
      acc += reduced(P).bottomLeftCorner(m, d);
    }
    acc /= static_cast<double>(total);
    cache.emplace(std::move(key), acc);
    return acc;
  };
  auto bfun = [&](const Vec& X) { return reduced(X).bottomRightCorner(m, m).trace() / m; };

  auto fields = [&](const Vec& X) -> std::vector<double> {
    const Mat R = reduced(X);
    const Mat LL = R.bottomLeftCorner(m, d);
    const Mat LR = R.bottomRightCorner(m, m);
    const double b = LR.trace() / m;
    rep.b_min = std::min(rep.b_min, b);
    rep.b_max = std::max(rep.b_max, b);
    const double c4 = (LR - b * Mat::Identity(m, m)).norm();
    const Mat B3 = b3(X);
    const double c3 = (LL - B3).norm();
    const double t = X.tail(m).norm();
    // Neighbour-cube differences of the piecewise-constant average.
    const double s = whitney_cube(d, X).side();
    double gb3 = 0.0;
    for (int k = 0; k < n; ++k) {
      Vec a = X, c = X;
      a[k] += s;
      c[k] -= s;
      gb3 += ((b3(a) - b3(c)) / (2.0 * s)).squaredNorm();
    }
    // Fourth-order centered differences for grad b.
    const double h = 0.05 * t;
    double gb = 0.0;
    for (int k = 0; k < n; ++k) {
      Vec p1 = X, p2 = X, m1 = X, m2 = X;
      p1[k] += h;
      p2[k] += 2 * h;
      m1[k] -= h;
      m2[k] -= 2 * h;
      const double der = (-bfun(p2) + 8 * bfun(p1) - 8 * bfun(m1) + bfun(m2)) / (12 * h);
      gb += der * der;
    }
    return {t * std::sqrt(gb3), c3, c4, t * std::sqrt(gb)};
  };
  auto reps = carleson_norms(fields, 4, d, n, balls, opts);
  rep.grad_b3 = reps[0];
  rep.c3 = reps[1];
  rep.c4 = reps[2];
  rep.grad_b = reps[3];
  rep.b_bounded_below = rep.b_min > 1e-3;
  return rep;
}

}  // namespace lowdim
