#pragma once

// Seeded Monte Carlo for the place-dependent chain: single steps,
// trajectories, same-noise coupled pairs, hitting times and escape-event
// estimators. Ensembles draw one RNG stream per replicate and reduce in
// replicate order, so results do not depend on the thread count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <thread>
#include <vector>

#include "amz/branch.hpp"
#include "amz/error.hpp"
#include "amz/ifs_core.hpp"
#include "amz/measures.hpp"
#include "amz/prob_field.hpp"
#include "amz/rng.hpp"

namespace amz {

/// Evaluates fn(r) for r in [0, count) and returns the results in index order.
template <class T, class Fn>
std::vector<T> run_replicates(std::size_t count, unsigned threads, Fn&& fn) {
  std::vector<T> out(count);
  threads = std::max(1u, threads);
  if (threads == 1 || count < 2) {
    for (std::size_t r = 0; r < count; ++r) out[r] = fn(r);
    return out;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (count + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] {
      for (std::size_t r = begin; r < end; ++r) out[r] = fn(r);
    });
  }
  for (auto& th : pool) th.join();
  return out;
}

struct StepResult {
  double next = 0.0;
  Branch branch = Branch::f0;
};

/// One transition: branch 0 iff u < p0(x) with u uniform on [0,1).
inline StepResult step(double x, const SystemParams& s, const ProbField& field, Rng& rng) {
  const Branch b = rng.uniform() < field.p0(x) ? Branch::f0 : Branch::f1;
  return {apply_map(s, b, x), b};
}

struct Trajectory {
  double start = 0.0;
  std::vector<double> states;          // x_0 ... x_n
  std::vector<Branch> branches;        // omega_1 ... omega_n
  std::vector<double> slope_products;  // a^k_omega for k = 0 ... n (a^0 = 1)
};

inline Trajectory trajectory(double x, std::size_t n, const SystemParams& s, const ProbField& field,
                             Rng& rng) {
  if (!(x > 0.0 && x < 1.0)) throw Error(ErrorKind::domain, "trajectory: start outside (0,1)");
  Trajectory t;
  t.start = x;
  t.states.reserve(n + 1);
  t.branches.reserve(n);
  t.slope_products.reserve(n + 1);
  t.states.push_back(x);
  t.slope_products.push_back(1.0);
  for (std::size_t k = 0; k < n; ++k) {
    const StepResult r = step(t.states.back(), s, field, rng);
    t.states.push_back(r.next);
    t.branches.push_back(r.branch);
    t.slope_products.push_back(t.slope_products.back() * s.slope(r.branch));
  }
  return t;
}

enum class Driver { x, y };

struct CoupledPair {
  std::vector<double> x_states;
  std::vector<double> y_states;
  std::vector<Branch> branches;
  Driver driver = Driver::x;
};

/// Both points follow the same branch word; branch probabilities are read at
/// the driver's current state.
inline CoupledPair coupled_trajectory(double x, double y, std::size_t n, const SystemParams& s,
                                      const ProbField& field, Rng& rng, Driver driver = Driver::x) {
  if (!(x > 0.0 && x < 1.0 && y > 0.0 && y < 1.0))
    throw Error(ErrorKind::domain, "coupled_trajectory: starts outside (0,1)");
  CoupledPair pair;
  pair.driver = driver;
  pair.x_states.reserve(n + 1);
  pair.y_states.reserve(n + 1);
  pair.branches.reserve(n);
  pair.x_states.push_back(x);
  pair.y_states.push_back(y);
  for (std::size_t k = 0; k < n; ++k) {
    const double xs = pair.x_states.back();
    const double ys = pair.y_states.back();
    const double pd = field.p0(driver == Driver::x ? xs : ys);
    const Branch b = rng.uniform() < pd ? Branch::f0 : Branch::f1;
    const double xn = apply_map(s, b, xs);
    const double yn = apply_map(s, b, ys);
    // Both maps are increasing, so the coupled order can never flip.
    if ((xs < ys && xn > yn) || (xs > ys && xn < yn))
      throw Error(ErrorKind::consistency, "coupled trajectory changed order");
    pair.x_states.push_back(xn);
    pair.y_states.push_back(yn);
    pair.branches.push_back(b);
  }
  return pair;
}

struct HittingTime {
  std::optional<std::uint64_t> steps;  // empty on timeout
  std::uint64_t cap = 0;
  bool timed_out() const { return !steps.has_value(); }
};

/// Least n >= 1 with x_n in (lo, hi), or a timeout after cap steps.
inline HittingTime first_hit(double x, double lo, double hi, std::uint64_t cap,
                             const SystemParams& s, const ProbField& field, Rng& rng) {
  if (!(0.0 < lo && lo < hi && hi < 1.0)) throw Error(ErrorKind::parameter, "first_hit: need 0 < lo < hi < 1");
  if (cap < 1) throw Error(ErrorKind::parameter, "first_hit: cap must be >= 1");
  double state = x;
  for (std::uint64_t n = 1; n <= cap; ++n) {
    state = step(state, s, field, rng).next;
    if (state > lo && state < hi) return {n, cap};
  }
  return {std::nullopt, cap};
}

enum class Side { left, right };

struct EscapeEstimate {
  double p_hat = 0.0;
  double std_error = 0.0;
  std::uint64_t n = 0;
  std::uint64_t samples = 0;
  RngSpec rng;
};

namespace detail {

inline void check_escape_args(double x, double epsilon) {
  if (!(x > 0.0 && x < epsilon && epsilon < 1.0))
    throw Error(ErrorKind::parameter, "escape: need 0 < x < epsilon < 1");
}

/// Number of steps (capped at n_max) during which replicate r stays strictly
/// on the near side of the barrier.
inline std::uint64_t stay_length(double x, double epsilon, std::uint64_t n_max, Side side,
                                 const SystemParams& s, const ProbField& field, RngSpec rng,
                                 std::size_t r) {
  Rng g({rng.seed, stream_id({rng.stream, r})});
  const double barrier = side == Side::left ? epsilon : 1.0 - epsilon;
  double state = side == Side::left ? x : 1.0 - x;
  for (std::uint64_t k = 0; k < n_max; ++k) {
    state = step(state, s, field, g).next;
    if (side == Side::left ? !(state < barrier) : !(state > barrier)) return k;
  }
  return n_max;
}

}  // namespace detail

/// Monte Carlo estimate of the probability that steps 1..n all stay strictly
/// below epsilon (left side, start x) or strictly above 1 - epsilon (right
/// side, start 1 - x). Replicate r uses stream stream_id({rng.stream, r}).
inline EscapeEstimate estimate_escape(double x, double epsilon, std::uint64_t n, std::uint64_t samples,
                                      Side side, const SystemParams& s, const ProbField& field,
                                      RngSpec rng, unsigned threads = 1) {
  detail::check_escape_args(x, epsilon);
  if (samples == 0) throw Error(ErrorKind::parameter, "estimate_escape: samples must be positive");
  const auto hits = run_replicates<unsigned char>(samples, threads, [&](std::size_t r) -> unsigned char {
    return detail::stay_length(x, epsilon, n, side, s, field, rng, r) == n;
  });
  std::uint64_t count = 0;
  for (unsigned char h : hits) count += h;
  const double N = static_cast<double>(samples);
  const double p = static_cast<double>(count) / N;
  return {p, std::sqrt(p * (1.0 - p) / N), n, samples, rng};
}

/// The same estimates for several n at once. Replicate r follows the same path
/// as in estimate_escape, so each entry equals the single-n result bitwise.
inline std::vector<EscapeEstimate> estimate_escape_curve(double x, double epsilon,
                                                         const std::vector<std::uint64_t>& ns,
                                                         std::uint64_t samples, Side side,
                                                         const SystemParams& s, const ProbField& field,
                                                         RngSpec rng, unsigned threads = 1) {
  detail::check_escape_args(x, epsilon);
  if (samples == 0) throw Error(ErrorKind::parameter, "estimate_escape: samples must be positive");
  std::uint64_t n_max = 0;
  for (auto n : ns) n_max = std::max(n_max, n);
  const auto stays = run_replicates<std::uint64_t>(samples, threads, [&](std::size_t r) {
    return detail::stay_length(x, epsilon, n_max, side, s, field, rng, r);
  });
  const double N = static_cast<double>(samples);
  std::vector<EscapeEstimate> out;
  for (auto n : ns) {
    std::uint64_t count = 0;
    for (auto len : stays) count += len >= n;
    const double p = static_cast<double>(count) / N;
    out.push_back({p, std::sqrt(p * (1.0 - p) / N), n, samples, rng});
  }
  return out;
}

inline EmpiricalMeasure empirical_measure(std::vector<double> samples) {
  return EmpiricalMeasure(std::move(samples));
}

/// (1/n) sum_{k=1..n} phi(X_k) along one trajectory from x.
inline double birkhoff_average(double x, std::uint64_t n, const std::function<double(double)>& phi,
                               const SystemParams& s, const ProbField& field, Rng& rng) {
  if (n == 0) throw Error(ErrorKind::parameter, "birkhoff_average: n must be positive");
  double state = x;
  double acc = 0.0;
  for (std::uint64_t k = 0; k < n; ++k) {
    state = step(state, s, field, rng).next;
    acc += phi(state);
  }
  return acc / static_cast<double>(n);
}

}  // namespace amz
