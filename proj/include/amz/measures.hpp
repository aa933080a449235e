#pragma once

// Carriers for the discretized operators: a kink-aligned grid on [0,1],
// piecewise-constant measures and piecewise-linear functions on it, and
// empirical measures built from samples. Distances are exact for these
// representations: grid CDFs are piecewise linear, empirical CDFs are steps.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <vector>

#include "amz/error.hpp"
#include "amz/ifs_core.hpp"

namespace amz {

class Grid {
 public:
  explicit Grid(std::vector<double> edges) : edges_(std::move(edges)) {
    if (edges_.size() < 2 || edges_.front() != 0.0 || edges_.back() != 1.0)
      throw Error(ErrorKind::size, "grid edges must start at 0 and end at 1");
    for (std::size_t i = 1; i < edges_.size(); ++i)
      if (!(edges_[i] > edges_[i - 1]))
        throw Error(ErrorKind::size, "grid edges must be strictly increasing");
  }

  std::size_t n_bins() const { return edges_.size() - 1; }
  std::span<const double> edges() const { return edges_; }
  double lo(std::size_t bin) const { return edges_[bin]; }
  double hi(std::size_t bin) const { return edges_[bin + 1]; }
  double width(std::size_t bin) const { return edges_[bin + 1] - edges_[bin]; }
  double mid(std::size_t bin) const { return 0.5 * (edges_[bin] + edges_[bin + 1]); }

  /// Bin containing x (half-open [lo, hi), the last bin also holds 1).
  std::size_t bin_of(double x) const {
    auto it = std::upper_bound(edges_.begin(), edges_.end(), x);
    if (it == edges_.begin()) return 0;
    const auto k = static_cast<std::size_t>(it - edges_.begin()) - 1;
    return std::min(k, n_bins() - 1);
  }

  bool has_edge(double x) const { return std::binary_search(edges_.begin(), edges_.end(), x); }

  /// Every bin lies on a single linear piece of f0 and of f1.
  bool kink_aligned(const SystemParams& s) const {
    return has_edge(s.x0()) && has_edge(1.0 - s.x0());
  }

  bool operator==(const Grid&) const = default;

 private:
  std::vector<double> edges_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Uniform n-bin grid with 1-x0 and x0 inserted (deduplicated within 1 ulp).
inline GridPtr make_grid(std::size_t n, const SystemParams& s) {
  if (n < 8) throw Error(ErrorKind::size, "make_grid: need at least 8 bins");
  std::vector<double> edges(n + 1);
  for (std::size_t i = 0; i <= n; ++i) edges[i] = static_cast<double>(i) / static_cast<double>(n);
  edges.back() = 1.0;
  for (double kink : {1.0 - s.x0(), s.x0()}) {
    auto it = std::lower_bound(edges.begin(), edges.end(), kink);
    const bool near_next = it != edges.end() && *it <= std::nextafter(kink, 2.0);
    const bool near_prev = it != edges.begin() && *(it - 1) >= std::nextafter(kink, -1.0);
    if (near_next) {
      *it = kink;
    } else if (near_prev) {
      *(it - 1) = kink;
    } else {
      edges.insert(it, kink);
    }
  }
  return std::make_shared<const Grid>(std::move(edges));
}

inline void require_same_grid(const GridPtr& a, const GridPtr& b) {
  if (a != b && !(*a == *b)) throw Error(ErrorKind::grid_mismatch, "measures live on different grids");
}

/// Piecewise-constant measure: mass[k] spread uniformly over bin k.
class GridMeasure {
 public:
  GridMeasure(GridPtr grid, std::vector<double> mass) : grid_(std::move(grid)), mass_(std::move(mass)) {
    if (mass_.size() != grid_->n_bins())
      throw Error(ErrorKind::grid_mismatch, "mass vector does not match the grid");
  }

  static GridMeasure zero(GridPtr grid) {
    const std::size_t n = grid->n_bins();
    return GridMeasure(std::move(grid), std::vector<double>(n, 0.0));
  }

  /// Lebesgue measure on (0,1).
  static GridMeasure uniform(GridPtr grid) {
    std::vector<double> m(grid->n_bins());
    for (std::size_t k = 0; k < m.size(); ++k) m[k] = grid->width(k);
    return GridMeasure(std::move(grid), std::move(m));
  }

  /// All mass in the bin containing x: the grid-scale stand-in for a Dirac mass.
  static GridMeasure point_like(GridPtr grid, double x) {
    GridMeasure mu = zero(grid);
    mu.mass_[grid->bin_of(x)] = 1.0;
    return mu;
  }

  /// Bin masses proportional to density(mid) * width, normalized to 1.
  static GridMeasure from_density(GridPtr grid, const std::function<double(double)>& density) {
    std::vector<double> m(grid->n_bins());
    for (std::size_t k = 0; k < m.size(); ++k) m[k] = std::max(0.0, density(grid->mid(k))) * grid->width(k);
    const double total = std::accumulate(m.begin(), m.end(), 0.0);
    if (!(total > 0.0)) throw Error(ErrorKind::parameter, "density has no mass on the grid");
    for (double& v : m) v /= total;
    return GridMeasure(std::move(grid), std::move(m));
  }

  const GridPtr& grid_ptr() const { return grid_; }
  const Grid& grid() const { return *grid_; }
  std::span<const double> mass() const { return mass_; }
  std::vector<double>& mass_mut() { return mass_; }

  double total() const { return std::accumulate(mass_.begin(), mass_.end(), 0.0); }

  /// CDF at every edge: cdf[k] = mass of bins below edge k.
  std::vector<double> cdf_at_edges() const {
    std::vector<double> cdf(mass_.size() + 1, 0.0);
    for (std::size_t k = 0; k < mass_.size(); ++k) cdf[k + 1] = cdf[k] + mass_[k];
    return cdf;
  }

  /// CDF at arbitrary x (linear within bins).
  double cdf(double x) const {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return total();
    const std::size_t k = grid_->bin_of(x);
    double acc = 0.0;
    for (std::size_t j = 0; j < k; ++j) acc += mass_[j];
    return acc + mass_[k] * (x - grid_->lo(k)) / grid_->width(k);
  }

  double mean() const {
    double acc = 0.0;
    for (std::size_t k = 0; k < mass_.size(); ++k) acc += mass_[k] * grid_->mid(k);
    return acc;
  }

 private:
  GridPtr grid_;
  std::vector<double> mass_;
};

/// Function given by its values at the grid edges, linearly interpolated.
class GridFunction {
 public:
  GridFunction(GridPtr grid, std::vector<double> values)
      : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_->n_bins() + 1)
      throw Error(ErrorKind::grid_mismatch, "value vector does not match the grid");
    for (double v : values_)
      if (!std::isfinite(v)) throw Error(ErrorKind::domain, "grid function values must be finite");
  }

  static GridFunction sample(GridPtr grid, const std::function<double(double)>& fn) {
    std::vector<double> v(grid->n_bins() + 1);
    const auto edges = grid->edges();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(edges[i]);
    return GridFunction(std::move(grid), std::move(v));
  }

  const GridPtr& grid_ptr() const { return grid_; }
  const Grid& grid() const { return *grid_; }
  std::span<const double> values() const { return values_; }

  double operator()(double x) const {
    if (x <= 0.0) return values_.front();
    if (x >= 1.0) return values_.back();
    const std::size_t k = grid_->bin_of(x);
    const double t = (x - grid_->lo(k)) / grid_->width(k);
    return values_[k] + (values_[k + 1] - values_[k]) * t;
  }

  double at_mid(std::size_t bin) const { return 0.5 * (values_[bin] + values_[bin + 1]); }

  double min() const { return *std::min_element(values_.begin(), values_.end()); }
  double max() const { return *std::max_element(values_.begin(), values_.end()); }

 private:
  GridPtr grid_;
  std::vector<double> values_;
};

/// Sorted samples with the right-continuous empirical CDF.
class EmpiricalMeasure {
 public:
  explicit EmpiricalMeasure(std::vector<double> samples) : samples_(std::move(samples)) {
    if (samples_.empty()) throw Error(ErrorKind::empty_input, "empirical measure needs samples");
    for (double s : samples_)
      if (!(s > 0.0 && s < 1.0)) throw Error(ErrorKind::domain, "samples must lie in (0,1)");
    std::sort(samples_.begin(), samples_.end());
  }

  std::span<const double> samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }

  /// Fraction of samples <= x.
  double cdf(double x) const {
    const auto it = std::upper_bound(samples_.begin(), samples_.end(), x);
    return static_cast<double>(it - samples_.begin()) / static_cast<double>(samples_.size());
  }

  /// Fraction of samples < x.
  double cdf_left(double x) const {
    const auto it = std::lower_bound(samples_.begin(), samples_.end(), x);
    return static_cast<double>(it - samples_.begin()) / static_cast<double>(samples_.size());
  }

  double mean() const {
    double acc = 0.0;
    for (double s : samples_) acc += s;
    return acc / static_cast<double>(samples_.size());
  }

 private:
  std::vector<double> samples_;
};

inline double integrate(const GridFunction& phi, const GridMeasure& mu) {
  require_same_grid(phi.grid_ptr(), mu.grid_ptr());
  double acc = 0.0;
  const auto m = mu.mass();
  for (std::size_t k = 0; k < m.size(); ++k) acc += m[k] * phi.at_mid(k);
  return acc;
}

inline double kolmogorov_distance(const GridMeasure& mu, const GridMeasure& nu) {
  require_same_grid(mu.grid_ptr(), nu.grid_ptr());
  const auto a = mu.mass();
  const auto b = nu.mass();
  double fa = 0.0, fb = 0.0, d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    fa += a[k];
    fb += b[k];
    d = std::max(d, std::abs(fa - fb));
  }
  return d;
}

inline double kolmogorov_distance(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  const auto a = mu.samples();
  const auto b = nu.samples();
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() || j < b.size()) {
    const double x = (j == b.size() || (i < a.size() && a[i] <= b[j])) ? a[i] : b[j];
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

/// Sup-distance between a piecewise-linear grid CDF and an empirical step CDF.
/// Between consecutive breakpoints the difference is linear, so the sup is
/// attained at breakpoints, taking both one-sided limits at each sample.
inline double kolmogorov_distance(const GridMeasure& mu, const EmpiricalMeasure& nu) {
  const Grid& g = mu.grid();
  const auto cdf = mu.cdf_at_edges();
  const auto mass = mu.mass();
  const auto s = nu.samples();
  const double n = static_cast<double>(s.size());
  auto grid_cdf = [&](double x) {
    const std::size_t k = g.bin_of(x);
    return cdf[k] + mass[k] * (x - g.lo(k)) / g.width(k);
  };
  double d = 0.0;
  std::size_t i = 0;
  for (std::size_t e = 0; e < cdf.size(); ++e) {
    const double x = g.edges()[e];
    while (i < s.size() && s[i] < x) ++i;
    std::size_t le = i;
    while (le < s.size() && s[le] == x) ++le;
    d = std::max(d, std::abs(cdf[e] - static_cast<double>(i) / n));
    d = std::max(d, std::abs(cdf[e] - static_cast<double>(le) / n));
  }
  for (std::size_t k = 0; k < s.size();) {
    const double x = s[k];
    std::size_t next = k;
    while (next < s.size() && s[next] == x) ++next;
    const double fx = grid_cdf(x);
    d = std::max(d, std::abs(fx - static_cast<double>(k) / n));
    d = std::max(d, std::abs(fx - static_cast<double>(next) / n));
    k = next;
  }
  return d;
}

inline double kolmogorov_distance(const EmpiricalMeasure& nu, const GridMeasure& mu) {
  return kolmogorov_distance(mu, nu);
}

/// Integral of |F_mu - F_nu| over [0,1]; exact since both CDFs are linear on each bin.
inline double wasserstein1(const GridMeasure& mu, const GridMeasure& nu) {
  require_same_grid(mu.grid_ptr(), nu.grid_ptr());
  const Grid& g = mu.grid();
  const auto a = mu.mass();
  const auto b = nu.mass();
  double left = 0.0, acc = 0.0, fa = 0.0, fb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    fa += a[k];
    fb += b[k];
    const double right = fa - fb;
    const double h = g.width(k);
    if ((left >= 0.0) == (right >= 0.0)) {
      acc += 0.5 * h * (std::abs(left) + std::abs(right));
    } else {
      acc += 0.5 * h * (left * left + right * right) / (std::abs(left) + std::abs(right));
    }
    left = right;
  }
  return acc;
}

}  // namespace amz
