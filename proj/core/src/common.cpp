#include "lowdim/common.hpp"

#include <cmath>
#include <cstring>

namespace lowdim {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::Config: return "config";
    case ErrorKind::Budget: return "budget";
    case ErrorKind::Accuracy: return "accuracy";
    case ErrorKind::Convergence: return "convergence";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::NonElliptic: return "non-elliptic";
    case ErrorKind::Degenerate: return "degenerate";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + " error: " + what), kind_(kind) {}

Box::Box(Vec lo_, Vec hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
  if (lo.size() != hi.size()) throw Error(ErrorKind::Dimension, "box corners differ in dimension");
  for (int k = 0; k < lo.size(); ++k)
    if (!(lo[k] <= hi[k])) throw Error(ErrorKind::Config, "box has lo > hi");
}

Box Box::cube(int dim, double lo, double hi) {
  return Box(Vec::Constant(dim, lo), Vec::Constant(dim, hi));
}

bool Box::contains(const Vec& x) const {
  for (int k = 0; k < lo.size(); ++k)
    if (x[k] < lo[k] || x[k] > hi[k]) return false;
  return true;
}

double Box::inner_margin(const Vec& x) const {
  double m = kInf;
  for (int k = 0; k < lo.size(); ++k) m = std::min({m, x[k] - lo[k], hi[k] - x[k]});
  return m;
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t hash_doubles(const double* data, std::size_t count, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, data + i, sizeof bits);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffU;
      h *= 1099511628211ULL;
    }
  }
  return h;
}

double unit_ball_volume(int k) {
  return std::pow(kPi, 0.5 * k) / std::tgamma(0.5 * k + 1.0);
}

double unit_sphere_area(int k) {
  return 2.0 * std::pow(kPi, 0.5 * k) / std::tgamma(0.5 * k);
}

}  // namespace lowdim
