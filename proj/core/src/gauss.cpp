#include "lowdim/gauss.hpp"

#include "lowdim/common.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <map>
#include <mutex>

namespace lowdim {
namespace {

template <int N>
GaussRule unpack() {
  using G = boost::math::quadrature::gauss<double, N>;
  const auto& a = G::abscissa();
  const auto& w = G::weights();
  GaussRule r;
  // Boost stores the non-negative half; odd orders start with the node at 0.
  for (int i = static_cast<int>(a.size()) - 1; i >= 0; --i) {
    if (a[i] == 0.0) continue;
    r.x.push_back(-a[i]);
    r.w.push_back(w[i]);
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    r.x.push_back(a[i]);
    r.w.push_back(w[i]);
  }
  return r;
}

GaussRule make(int order) {
  switch (order) {
    case 1: return GaussRule{{0.0}, {2.0}};
    case 2: return unpack<2>();
    case 3: return unpack<3>();
    case 4: return unpack<4>();
    case 5: return unpack<5>();
    case 8: return unpack<8>();
    case 10: return unpack<10>();
    case 16: return unpack<16>();
    case 20: return unpack<20>();
    case 32: return unpack<32>();
    default: throw Error(ErrorKind::Precondition, "unsupported Gauss-Legendre order");
  }
}

}  // namespace

const GaussRule& gauss_legendre(int order) {
  static std::mutex mu;
  static std::map<int, GaussRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, make(order)).first;
  return it->second;
}

GaussRule gauss_on(int order, double a, double b) {
  const GaussRule& g = gauss_legendre(order);
  GaussRule r;
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  r.x.reserve(g.x.size());
  r.w.reserve(g.w.size());
  for (std::size_t i = 0; i < g.x.size(); ++i) {
    r.x.push_back(c + h * g.x[i]);
    r.w.push_back(h * g.w[i]);
  }
  return r;
}

}  // namespace lowdim
