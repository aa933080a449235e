#pragma once

// Ulam discretization of the Markov-Feller operator
//
//   P mu(A) = int_{f0^{-1}(A)} p0 dmu + int_{f1^{-1}(A)} p1 dmu
//
// and its predual U phi(x) = p0(x) phi(f0(x)) + p1(x) phi(f1(x)).
//
// On a kink-aligned grid every bin is mapped affinely by each branch, so the
// image of a bin is a single interval and mass can be redistributed exactly by
// overlap length. Only the place-dependent weights are approximated (by their
// value at the bin midpoint), which keeps P exactly mass preserving.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "amz/error.hpp"
#include "amz/ifs_core.hpp"
#include "amz/measures.hpp"
#include "amz/prob_field.hpp"

namespace amz {

class UlamOperator {
 public:
  UlamOperator(GridPtr grid, const SystemParams& params, const ProbField& field)
      : grid_(std::move(grid)) {
    if (!grid_->kink_aligned(params))
      throw Error(ErrorKind::grid_mismatch, "grid lacks the kinks 1-x0 and x0");
    const Grid& g = *grid_;
    const std::size_t n = g.n_bins();
    row_start_.reserve(n + 1);
    row_start_.push_back(0);
    std::vector<Entry> row;
    for (std::size_t j = 0; j < n; ++j) {
      row.clear();
      const double w0 = field.p0(g.mid(j));
      append_image(g, params, Branch::f0, j, w0, row);
      append_image(g, params, Branch::f1, j, 1.0 - w0, row);
      entries_.insert(entries_.end(), row.begin(), row.end());
      row_start_.push_back(entries_.size());
    }
  }

  const GridPtr& grid_ptr() const { return grid_; }

  /// Largest fraction of a bin image that fell outside [0,1]; zero for maps fixing 0 and 1.
  double redistribution_error() const { return escaped_; }

  GridMeasure push(const GridMeasure& mu) const {
    require_same_grid(mu.grid_ptr(), grid_);
    std::vector<double> out(grid_->n_bins(), 0.0);
    const auto m = mu.mass();
    for (std::size_t j = 0; j < m.size(); ++j) {
      const double mj = m[j];
      if (mj == 0.0) continue;
      for (std::size_t e = row_start_[j]; e < row_start_[j + 1]; ++e)
        out[entries_[e].dest] += mj * entries_[e].coef;
    }
    return GridMeasure(grid_, std::move(out));
  }

 private:
  struct Entry {
    std::uint32_t dest;
    double coef;
  };

  void append_image(const Grid& g, const SystemParams& s, Branch b, std::size_t j, double weight,
                    std::vector<Entry>& row) {
    if (weight == 0.0) return;
    const double lo = detail::map_closed(s, b, g.lo(j));
    const double hi = detail::map_closed(s, b, g.hi(j));
    const double len = hi - lo;
    const std::size_t first = row.size();
    double covered = 0.0;
    for (std::size_t k = g.bin_of(lo); k < g.n_bins() && g.lo(k) < hi; ++k) {
      const double overlap = std::fmin(g.hi(k), hi) - std::fmax(g.lo(k), lo);
      if (overlap <= 0.0) continue;
      row.push_back({static_cast<std::uint32_t>(k), overlap});
      covered += overlap;
    }
    escaped_ = std::fmax(escaped_, std::abs(len - covered) / len);
    // Normalize so the fractions of this image sum to one.
    for (std::size_t e = first; e < row.size(); ++e) row[e].coef = weight * (row[e].coef / covered);
  }

  GridPtr grid_;
  std::vector<std::size_t> row_start_;
  std::vector<Entry> entries_;
  double escaped_ = 0.0;
};

inline GridMeasure push_measure(const GridMeasure& mu, const SystemParams& params,
                                const ProbField& field) {
  return UlamOperator(mu.grid_ptr(), params, field).push(mu);
}

/// U phi evaluated at every grid edge; phi is read by linear interpolation.
inline GridFunction apply_dual(const GridFunction& phi, const SystemParams& params,
                               const ProbField& field) {
  const auto edges = phi.grid().edges();
  std::vector<double> out(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const double x = edges[i];
    const double w0 = field.p0(x);
    out[i] = w0 * phi(detail::f0_closed(params, x)) + (1.0 - w0) * phi(detail::f1_closed(params, x));
  }
  return GridFunction(phi.grid_ptr(), std::move(out));
}

enum class Stopping {
  // Stop once the estimated distance to the fixed point, r_n q / (1 - q) with
  // q the largest of the last few residual ratios, drops below tol.
  error_estimate,
  // Stop once a single step moves less than tol.
  step,
};

struct PowerOptions {
  bool cesaro = false;  // iterate the running average (1/n) sum P^k mu0 instead of P^n mu0
  Stopping stopping = Stopping::error_estimate;
  std::size_t rate_window = 5;
};

struct PowerResult {
  GridMeasure mu_star;
  std::size_t iters = 0;
  double residual = 0.0;        // Kolmogorov distance between the last two iterates
  double w1_residual = 0.0;     // Wasserstein-1 distance between the last two iterates
  double rate = 1.0;            // observed contraction rate of the residuals
  double error_estimate = 1.0;  // residual * rate / (1 - rate); infinite while rate >= 1
  bool converged = false;
};

inline PowerResult power_iterate(const GridMeasure& mu0, double tol, std::size_t max_iter,
                                 const UlamOperator& op, PowerOptions opts = {}) {
  if (!(tol > 0.0)) throw Error(ErrorKind::parameter, "power_iterate: tol must be positive");
  GridMeasure current = mu0;
  GridMeasure average = mu0;
  std::vector<double> history;
  PowerResult r{mu0, 0, 1.0, 1.0, 1.0, std::numeric_limits<double>::infinity(), false};
  for (std::size_t it = 1; it <= max_iter; ++it) {
    GridMeasure next = op.push(current);
    if (opts.cesaro) {
      // average_{n+1} = (n average_n + P^n mu0) / (n + 1)
      std::vector<double> avg(average.mass().begin(), average.mass().end());
      const double n = static_cast<double>(it);
      const auto nm = next.mass();
      for (std::size_t k = 0; k < avg.size(); ++k) avg[k] = (n * avg[k] + nm[k]) / (n + 1.0);
      GridMeasure updated(average.grid_ptr(), std::move(avg));
      r.residual = kolmogorov_distance(average, updated);
      r.w1_residual = wasserstein1(average, updated);
      average = std::move(updated);
    } else {
      r.residual = kolmogorov_distance(current, next);
      r.w1_residual = wasserstein1(current, next);
    }
    current = std::move(next);
    history.push_back(r.residual);
    r.iters = it;

    const std::size_t w = std::max<std::size_t>(1, opts.rate_window);
    if (history.size() > w) {
      double q = 0.0;
      for (std::size_t k = history.size() - w; k < history.size(); ++k)
        q = std::fmax(q, history[k - 1] > 0.0 ? history[k] / history[k - 1] : 0.0);
      r.rate = q;
      r.error_estimate = q < 1.0 ? r.residual * q / (1.0 - q) : std::numeric_limits<double>::infinity();
    }
    if (r.residual == 0.0) r.error_estimate = 0.0;
    const bool done = opts.stopping == Stopping::step ? r.residual < tol : r.error_estimate < tol;
    if (done) {
      r.converged = true;
      break;
    }
  }
  r.mu_star = opts.cesaro ? average : current;
  return r;
}

inline PowerResult power_iterate(const GridMeasure& mu0, double tol, std::size_t max_iter,
                                 const SystemParams& params, const ProbField& field,
                                 PowerOptions opts = {}) {
  const UlamOperator op(mu0.grid_ptr(), params, field);
  return power_iterate(mu0, tol, max_iter, op, opts);
}

}  // namespace amz
