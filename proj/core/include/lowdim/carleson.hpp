#pragma once

#include "lowdim/common.hpp"

#include <iosfwd>
#include <vector>

namespace lowdim {

struct CarlesonEntry {
  Vec center;       // ball center in R^d (or dyadic cube center)
  double radius;    // ell (or cube side)
  double quotient;  // (1/ell^d) * integral, or the dyadic beta sum
};

struct CarlesonReport {
  std::vector<CarlesonEntry> entries;
  double supremum = 0.0;
  bool divergent = false;
  /// For divergent integrals: band-to-band growth factor at the smallest scales.
  double growth_rate = 0.0;
  int resolution = 0;

  void add(const Vec& center, double radius, double quotient);
};

void write_carleson_csv(const CarlesonReport& report, std::ostream& out);

}  // namespace lowdim
