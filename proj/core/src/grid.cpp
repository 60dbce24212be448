#include "lowdim/grid.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace lowdim {

std::vector<double> graded_axis(double lo, double hi, double g_lo, double g_hi, double h_min,
                                double h_max, double ratio, double jitter) {
  if (!(lo < hi)) throw Error(ErrorKind::Config, "empty grid axis");
  if (!(h_min > 0.0) || h_min > h_max) throw Error(ErrorKind::Config, "grid spacing requires 0 < h_min <= h_max");
  if (!(ratio > 1.0 && ratio <= 2.0)) throw Error(ErrorKind::Config, "grading ratio must lie in (1, 2]");

  const double f_lo = std::max(lo, g_lo - 2.0 * h_min);
  const double f_hi = std::min(hi, g_hi + 2.0 * h_min);
  if (g_lo > g_hi || f_lo > hi || f_hi < lo || f_lo >= f_hi) {
    const int m = static_cast<int>(std::ceil((hi - lo) / h_max - 1e-9));
    std::vector<double> a(static_cast<std::size_t>(m) + 1);
    for (int i = 0; i <= m; ++i) a[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / m;
    a.back() = hi;
    return a;
  }

  std::vector<double> core;
  if (g_hi - g_lo < h_min) {
    // Gamma projects to (nearly) a point: put a node line on it (shifted by the jitter).
    const double c = std::clamp(0.5 * (g_lo + g_hi) + jitter * h_min, lo, hi);
    for (int j = -3; j <= 3; ++j) {
      const double v = c + j * h_min;
      if (v > lo && v < hi) core.push_back(v);
    }
    if (core.empty()) core.push_back(c);
  } else {
    const int m = std::max(1, static_cast<int>(std::ceil((f_hi - f_lo) / h_min - 1e-9)));
    for (int i = 0; i <= m; ++i) core.push_back(f_lo + (f_hi - f_lo) * i / m);
  }

  auto extend = [&](double start, double limit, double dir) {
    std::vector<double> out;
    double cur = start;
    double s = h_min;
    if (std::abs(limit - cur) < 1e-12) return out;
    while (true) {
      s = std::min(s * ratio, h_max);
      const double next = cur + dir * s;
      if (dir * (limit - next) < 0.5 * s) {
        if (std::abs(limit - cur) < 0.25 * h_min && !out.empty()) out.back() = limit;
        else out.push_back(limit);
        break;
      }
      out.push_back(next);
      cur = next;
    }
    return out;
  };

  const auto upper = extend(core.back(), hi, 1.0);
  const auto lower = extend(core.front(), lo, -1.0);
  std::vector<double> a(lower.rbegin(), lower.rend());
  a.insert(a.end(), core.begin(), core.end());
  a.insert(a.end(), upper.begin(), upper.end());
  a.front() = std::min(a.front(), lo);
  a.back() = std::max(a.back(), hi);
  if (a.front() != lo) a.insert(a.begin(), lo);
  if (a.back() != hi) a.push_back(hi);
  return a;
}

namespace {

struct Interval {
  double lo, hi;
};

std::vector<Interval> gamma_projection(const BoundarySet& gamma, const Box& box) {
  const int n = gamma.n();
  std::vector<Interval> proj(static_cast<std::size_t>(n));
  if (gamma.is_plane()) {
    const int d = gamma.param_dim();
    for (int k = 0; k < n; ++k) proj[k] = k < d ? Interval{-kInf, kInf} : Interval{0.0, 0.0};
  } else if (gamma.is_graph()) {
    const int d = gamma.param_dim();
    const auto& phi = gamma.graph_function();
    for (int k = 0; k < d; ++k) proj[k] = {-kInf, kInf};
    for (int k = d; k < n; ++k) proj[k] = {kInf, -kInf};
    const int per_axis = d == 1 ? 2001 : 101;
    std::size_t total = 1;
    for (int k = 0; k < d; ++k) total *= static_cast<std::size_t>(per_axis);
    Vec x(d);
    for (std::size_t idx = 0; idx < total; ++idx) {
      std::size_t rem = idx;
      for (int k = 0; k < d; ++k) {
        const int i = static_cast<int>(rem % per_axis);
        rem /= per_axis;
        x[k] = box.lo[k] + (box.hi[k] - box.lo[k]) * i / (per_axis - 1);
      }
      const Vec v = phi.value(x);
      for (int c = 0; c < n - d; ++c) {
        proj[d + c].lo = std::min(proj[d + c].lo, v[c]);
        proj[d + c].hi = std::max(proj[d + c].hi, v[c]);
      }
    }
  } else {
    const auto& maps = gamma.maps();
    int level = 0;
    std::size_t count = 1;
    while (count * maps.size() <= 4096 && level < 12) {
      count *= maps.size();
      ++level;
    }
    for (int k = 0; k < n; ++k) proj[k] = {kInf, -kInf};
    for (std::size_t w = 0; w < count; ++w) {
      Vec p = gamma.cantor_anchor();
      std::size_t rem = w;
      for (int l = 0; l < level; ++l) {
        const auto& m = maps[rem % maps.size()];
        rem /= maps.size();
        p = m.ratio * p + m.offset;
      }
      for (int k = 0; k < n; ++k) {
        proj[k].lo = std::min(proj[k].lo, p[k]);
        proj[k].hi = std::max(proj[k].hi, p[k]);
      }
    }
  }
  return proj;
}

int cantor_level_for(const BoundarySet& gamma, double h) {
  if (!gamma.is_cantor()) return kCantorDistanceLevel;
  int level = 1;
  while (level < kCantorDistanceLevel && cantor_covering_radius(gamma, level) > h / 8.0) ++level;
  return level;
}

}  // namespace

Grid Grid::build(const Box& box, const BoundarySet& gamma, const GridOptions& opts) {
  if (box.dim() != gamma.n()) throw Error(ErrorKind::Dimension, "grid box dimension != n");
  const int n = gamma.n();
  auto proj = gamma_projection(gamma, box);
  std::vector<std::vector<double>> axes(static_cast<std::size_t>(n));
  double total = 1.0;
  for (int k = 0; k < n; ++k) {
    Interval p = proj[k];
    if (opts.focus) {
      p.lo = std::max(p.lo, opts.focus->lo[k]);
      p.hi = std::min(p.hi, opts.focus->hi[k]);
      if (proj[k].hi - proj[k].lo < opts.h_min && p.lo > p.hi) p = proj[k];
    }
    p.lo = std::max(p.lo, box.lo[k] - 4.0 * opts.h_min);
    p.hi = std::min(p.hi, box.hi[k] + 4.0 * opts.h_min);
    axes[k] = graded_axis(box.lo[k], box.hi[k], p.lo, p.hi, opts.h_min, opts.h_max, opts.grading_ratio,
                          opts.jitter);
    total *= static_cast<double>(axes[k].size());
  }
  if (total > static_cast<double>(opts.max_nodes)) {
    std::ostringstream os;
    os << "grid needs " << static_cast<std::size_t>(total) << " nodes, budget " << opts.max_nodes;
    throw Error(ErrorKind::Budget, os.str());
  }
  Grid g = from_axes(std::move(axes), gamma, opts.band_width > 0.0 ? opts.band_width : 2.0 * opts.h_min);
  g.h_min_ = opts.h_min;
  return g;
}

Grid Grid::from_axes(std::vector<std::vector<double>> axes, const BoundarySet& gamma, double band_width) {
  Grid g;
  const int n = static_cast<int>(axes.size());
  if (n != gamma.n()) throw Error(ErrorKind::Dimension, "grid axes dimension != n");
  g.axes_ = std::move(axes);
  g.strides_.assign(static_cast<std::size_t>(n), 1);
  g.size_ = 1;
  double hmin = kInf;
  for (int k = n - 1; k >= 0; --k) {
    const auto& a = g.axes_[k];
    if (a.size() < 3) throw Error(ErrorKind::Config, "grid axis needs at least 3 nodes");
    for (std::size_t i = 1; i < a.size(); ++i) {
      if (!(a[i] > a[i - 1])) throw Error(ErrorKind::Config, "grid axis not strictly increasing");
      hmin = std::min(hmin, a[i] - a[i - 1]);
    }
    g.strides_[k] = g.size_;
    g.size_ *= a.size();
  }
  g.gamma_ = std::make_shared<const BoundarySet>(gamma);
  g.h_min_ = hmin;
  g.band_width_ = band_width;
  g.classify();
  return g;
}

void Grid::classify() {
  const int n = dim();
  kinds_.assign(size_, NodeKind::Interior);
  delta_.assign(size_, 0.0);
  feet_.assign(size_ * static_cast<std::size_t>(n), 0.0);
  const int level = cantor_level_for(*gamma_, h_min_);
  for (std::size_t node = 0; node < size_; ++node) {
    bool shell = false;
    for (int k = 0; k < n; ++k) {
      const int i = index_along(node, k);
      if (i == 0 || i + 1 == static_cast<int>(axes_[k].size())) shell = true;
    }
    const DistanceResult dr = distance(*gamma_, point(node), level);
    delta_[node] = dr.value;
    for (int k = 0; k < n; ++k) feet_[node * n + k] = dr.foot[k];
    if (shell) kinds_[node] = NodeKind::OuterShell;
    else if (dr.value <= band_width_) kinds_[node] = NodeKind::GammaBand;
  }
}

int Grid::index_along(std::size_t node, int k) const {
  return static_cast<int>((node / strides_[k]) % axes_[k].size());
}

std::size_t Grid::flatten(const std::vector<int>& multi) const {
  std::size_t idx = 0;
  for (int k = 0; k < dim(); ++k) idx += static_cast<std::size_t>(multi[k]) * strides_[k];
  return idx;
}

Vec Grid::point(std::size_t node) const {
  Vec X(dim());
  for (int k = 0; k < dim(); ++k) X[k] = axes_[k][static_cast<std::size_t>(index_along(node, k))];
  return X;
}

Vec Grid::foot(std::size_t node) const {
  const int n = dim();
  return Eigen::Map<const Vec>(feet_.data() + node * n, n);
}

double Grid::dual_width(int k, int i) const {
  const auto& a = axes_[k];
  const int last = static_cast<int>(a.size()) - 1;
  const double lo = i == 0 ? a[0] : 0.5 * (a[i - 1] + a[i]);
  const double hi = i == last ? a[last] : 0.5 * (a[i] + a[i + 1]);
  return hi - lo;
}

double Grid::volume(std::size_t node) const {
  double v = 1.0;
  for (int k = 0; k < dim(); ++k) v *= dual_width(k, index_along(node, k));
  return v;
}

Box Grid::box() const {
  Vec lo(dim()), hi(dim());
  for (int k = 0; k < dim(); ++k) {
    lo[k] = axes_[k].front();
    hi[k] = axes_[k].back();
  }
  return Box(lo, hi);
}

std::size_t Grid::count(NodeKind kd) const {
  return static_cast<std::size_t>(std::count(kinds_.begin(), kinds_.end(), kd));
}

std::vector<std::size_t> Grid::nodes_of(NodeKind kd) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < size_; ++i)
    if (kinds_[i] == kd) out.push_back(i);
  return out;
}

Grid::Cell Grid::locate(const Vec& X) const {
  const int n = dim();
  if (X.size() != n) throw Error(ErrorKind::Dimension, "point dimension != grid dimension");
  Cell c;
  c.lower.resize(static_cast<std::size_t>(n));
  c.frac.resize(n);
  c.width.resize(n);
  for (int k = 0; k < n; ++k) {
    const auto& a = axes_[k];
    const double tol = 1e-12 * (a.back() - a.front());
    if (X[k] < a.front() - tol || X[k] > a.back() + tol) {
      std::ostringstream os;
      os << "point outside the grid box on axis " << k;
      throw Error(ErrorKind::Domain, os.str());
    }
    auto it = std::upper_bound(a.begin(), a.end(), X[k]);
    int i = static_cast<int>(it - a.begin()) - 1;
    i = std::clamp(i, 0, static_cast<int>(a.size()) - 2);
    c.lower[k] = i;
    c.width[k] = a[i + 1] - a[i];
    c.frac[k] = std::clamp((X[k] - a[i]) / c.width[k], 0.0, 1.0);
  }
  return c;
}

void Grid::write_structured(std::ostream& out, const std::vector<double>& values) const {
  out << "lowdim-structured 1\n" << std::setprecision(17);
  out << "dims";
  for (const auto& a : axes_) out << " " << a.size();
  out << "\n";
  for (int k = 0; k < dim(); ++k) {
    out << "axis" << k;
    for (double v : axes_[k]) out << " " << v;
    out << "\n";
  }
  out << "values\n";
  for (double v : values) out << v << "\n";
}

void Grid::write_csv(std::ostream& out, const std::vector<double>& values) const {
  for (int k = 0; k < dim(); ++k) out << "x" << (k + 1) << ",";
  out << "value\n" << std::setprecision(17);
  for (std::size_t i = 0; i < size_; ++i) {
    const Vec X = point(i);
    for (int k = 0; k < dim(); ++k) out << X[k] << ",";
    out << values[i] << "\n";
  }
}

}  // namespace lowdim
