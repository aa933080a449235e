#pragma once

// Named experiments. Each one turns a qualitative statement about the chain
// into a pass/fail report with effect sizes. All tolerances, horizons and
// sample sizes below are engineering defaults; they are echoed into every
// report so a run can be reproduced from (config_echo, seed) alone.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "amz/certificate.hpp"
#include "amz/error.hpp"
#include "amz/ifs_core.hpp"
#include "amz/measures.hpp"
#include "amz/prob_field.hpp"
#include "amz/report.hpp"
#include "amz/rng.hpp"
#include "amz/simulate.hpp"
#include "amz/transfer.hpp"

namespace amz {

struct ExperimentContext {
  SystemParams system;
  ProbField field;
  std::uint64_t seed = 0;
  std::size_t grid_n = 4096;
  unsigned threads = 1;  // affects speed only, never results
};

// Stream tags keep the experiments' random streams disjoint.
enum class StreamTag : std::uint64_t { escape = 1, prop1, prop2, reach, stationary, slln };

inline RngSpec experiment_stream(const ExperimentContext& ctx, StreamTag tag,
                                 std::initializer_list<std::uint64_t> parts = {}) {
  std::uint64_t id = stream_id({static_cast<std::uint64_t>(tag)});
  for (auto p : parts) id = stream_id({id, p});
  return {ctx.seed, id};
}

// ---------------------------------------------------------------------------
// Test functions shared by the SLLN and equicontinuity experiments.

struct TestFunction {
  std::string name;
  std::function<double(double)> fn;
  double lipschitz = 0.0;
};

/// Known names: "one", "x", "x2", "smooth_indicator_c" (1 on (0, c - w],
/// 0 on [c + w, 1), linear in between).
inline TestFunction make_test_function(const std::string& name, double c, double width = 0.01) {
  if (name == "one") return {name, [](double) { return 1.0; }, 0.0};
  if (name == "x") return {name, [](double x) { return x; }, 1.0};
  if (name == "x2") return {name, [](double x) { return x * x; }, 2.0};
  if (name == "smooth_indicator_c") {
    if (!(width > 0.0)) throw Error(ErrorKind::parameter, "smoothing width must be positive");
    return {name, [c, width](double x) { return std::clamp((c + width - x) / (2.0 * width), 0.0, 1.0); },
            1.0 / (2.0 * width)};
  }
  throw Error(ErrorKind::parameter, "unknown test function '" + name + "'");
}

namespace detail {

inline json echo(const ExperimentContext& ctx, const std::string& name, json params, bool grid = false) {
  json j;
  j["experiment"] = name;
  j["system"] = system_to_json(ctx.system);
  j["p0"] = field_to_json(ctx.field);
  j["seed"] = ctx.seed;
  if (grid) j["grid_n"] = ctx.grid_n;
  j["params"] = std::move(params);
  return j;
}

inline ExperimentReport start_report(const ExperimentContext& ctx, const std::string& name, json params,
                                     bool grid = false) {
  ExperimentReport r;
  r.name = name;
  r.seed = ctx.seed;
  r.config_echo = echo(ctx, name, std::move(params), grid);
  return r;
}

inline std::optional<Certificate> certificate_or_note(const ExperimentContext& ctx, ExperimentReport& r) {
  try {
    Certificate cert = find_certificate(ctx.system, ctx.field);
    r.metrics["certificate/epsilon"] = cert.epsilon;
    r.metrics["certificate/alpha"] = cert.alpha;
    r.metrics["certificate/p"] = cert.p;
    r.metrics["certificate/M"] = cert.m_const;
    return cert;
  } catch (const Error& e) {
    r.notes.push_back(std::string("no certificate: ") + e.what());
    return std::nullopt;
  }
}

inline std::string key(const std::string& a, double v) { return a + "=" + format_double(v); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Escape from the endpoint neighbourhoods.

struct EscapeConfig {
  std::vector<double> xs{0.02, 0.05, 0.1};
  std::vector<std::uint64_t> ns{10, 50, 100, 200};
  std::uint64_t samples = 100000;
  std::vector<std::string> sides{"left", "right"};
  double inject_offset = 0.0;  // added to every estimate; harness self-test only

  json echo() const {
    return {{"xs", xs}, {"ns", ns}, {"samples", samples}, {"sides", sides}, {"inject_offset", inject_offset}};
  }
};

/// Checks p_hat <= min(1, (eps/x)^alpha p^n) + 3 stderr for the probability of
/// staying within eps of an endpoint for n steps.
inline ExperimentReport exp_escape_bound(const ExperimentContext& ctx, const EscapeConfig& cfg) {
  ExperimentReport r = detail::start_report(ctx, "escape", cfg.echo());
  const auto cert = detail::certificate_or_note(ctx, r);
  if (!cert) return r;

  Series s{"escape", {"side", "x", "n", "p_hat", "stderr", "bound", "slack"}, {}, true};
  double worst = std::numeric_limits<double>::infinity();
  bool ok = true;
  for (std::size_t si = 0; si < cfg.sides.size(); ++si) {
    const std::string& name = cfg.sides[si];
    if (name != "left" && name != "right") throw Error(ErrorKind::parameter, "unknown side '" + name + "'");
    const Side side = name == "left" ? Side::left : Side::right;
    for (std::size_t xi = 0; xi < cfg.xs.size(); ++xi) {
      const double x = cfg.xs[xi];
      if (!(x > 0.0)) throw Error(ErrorKind::parameter, "escape: x must be positive");
      if (!(x < cert->epsilon)) {
        r.notes.push_back(detail::key("x", x) + " is not below epsilon; the bound is trivially 1");
        continue;
      }
      const auto est = estimate_escape_curve(
          x, cert->epsilon, cfg.ns, cfg.samples, side, ctx.system, ctx.field,
          experiment_stream(ctx, StreamTag::escape, {si, xi}), ctx.threads);
      for (const EscapeEstimate& e : est) {
        const double nn = static_cast<double>(e.n);
        const double bound =
            std::fmin(1.0, std::pow(cert->epsilon / x, cert->alpha) * std::pow(cert->p, nn));
        const double p_hat = e.p_hat + cfg.inject_offset;
        const double slack = bound + 3.0 * e.std_error - p_hat;
        worst = std::fmin(worst, slack);
        ok = ok && slack >= 0.0;
        const std::string k = name + "/" + detail::key("x", x) + "/" + detail::key("n", nn) + "/";
        r.metrics[k + "p_hat"] = p_hat;
        r.metrics[k + "stderr"] = e.std_error;
        r.metrics[k + "bound"] = bound;
        s.rows.push_back({static_cast<double>(si), x, nn, p_hat, e.std_error, bound, slack});
      }
    }
  }
  r.metrics["worst_slack"] = worst;
  r.series.push_back(std::move(s));
  r.passed = ok;
  return r;
}

// ---------------------------------------------------------------------------
// Uniform coupling bound for nearby central points.

struct Prop1Config {
  std::uint64_t pairs = 10000;
  std::uint64_t word_length = 200;
  double probe_x = 0.40;
  double probe_y = 0.45;
  unsigned exhaustive_depth = 12;
  double bound_scale = 1.0;  // below 1 the check must fail; harness self-test
  double tolerance = 1e-12;

  json echo() const {
    return {{"pairs", pairs}, {"word_length", word_length}, {"probe_x", probe_x}, {"probe_y", probe_y},
            {"exhaustive_depth", exhaustive_depth}, {"bound_scale", bound_scale}, {"tolerance", tolerance}};
  }
};

/// Largest |f^k_w(x) - f^k_w(y)| over all words w of length <= depth.
inline double exhaustive_max_deviation(double x, double y, unsigned depth, const SystemParams& s) {
  double best = std::abs(x - y);
  // Depth-first over the binary tree of words; the stack holds (x, y, level).
  struct Node {
    double x, y;
    unsigned level;
  };
  std::vector<Node> stack{{x, y, 0}};
  while (!stack.empty()) {
    const Node n = stack.back();
    stack.pop_back();
    best = std::fmax(best, std::abs(n.x - n.y));
    if (n.level == depth) continue;
    for (Branch b : {Branch::f0, Branch::f1})
      stack.push_back({apply_map(s, b, n.x), apply_map(s, b, n.y), n.level + 1});
  }
  return best;
}

inline ExperimentReport exp_prop1(const ExperimentContext& ctx, const Prop1Config& cfg) {
  ExperimentReport r = detail::start_report(ctx, "prop1", cfg.echo());
  const SystemParams& s = ctx.system;
  const double eta1 = admissible_eta1(s);
  const double lo = 1.0 - s.x0();
  const double hi = s.x0();
  r.metrics["eta1"] = eta1;

  // Exhaustive oracle on the probe pair.
  const double gap = std::abs(cfg.probe_x - cfg.probe_y);
  if (!(cfg.probe_x >= lo && cfg.probe_x <= hi && cfg.probe_y >= lo && cfg.probe_y <= hi && gap < eta1))
    r.notes.push_back("probe pair is outside the hypotheses (central interval, gap < eta1)");
  const double ex_dev = exhaustive_max_deviation(cfg.probe_x, cfg.probe_y, cfg.exhaustive_depth, s);
  const double ex_bound = cfg.bound_scale * s.a1() * gap;
  const bool ex_ok = ex_dev <= ex_bound + cfg.tolerance;
  r.metrics["exhaustive/max_deviation"] = ex_dev;
  r.metrics["exhaustive/bound"] = ex_bound;

  // Random pairs in the central interval with gap < eta1, driven by the chain at x.
  struct PairResult {
    double ratio = 0.0;
    std::uint64_t violations = 0;
  };
  const RngSpec base = experiment_stream(ctx, StreamTag::prop1);
  const auto results = run_replicates<PairResult>(cfg.pairs, ctx.threads, [&](std::size_t k) {
    Rng g({base.seed, stream_id({base.stream, k})});
    const double x = lo + (hi - lo) * g.uniform();
    const double d = eta1 * g.uniform();
    const double y = x + d <= hi ? x + d : x - d;
    const double bound = cfg.bound_scale * s.a1() * std::abs(x - y);
    PairResult out;
    double xs = x, ys = y;
    for (std::uint64_t n = 0; n <= cfg.word_length; ++n) {
      const double dev = std::abs(xs - ys);
      if (dev > bound + cfg.tolerance) ++out.violations;
      if (x != y) out.ratio = std::fmax(out.ratio, dev / (s.a1() * std::abs(x - y)));
      const Branch b = g.uniform() < ctx.field.p0(xs) ? Branch::f0 : Branch::f1;
      xs = apply_map(s, b, xs);
      ys = apply_map(s, b, ys);
    }
    return out;
  });
  double max_ratio = 0.0;
  std::uint64_t violations = 0;
  for (const auto& pr : results) {
    max_ratio = std::fmax(max_ratio, pr.ratio);
    violations += pr.violations;
  }
  r.metrics["random/max_ratio"] = max_ratio;
  r.metrics["random/violations"] = static_cast<double>(violations);
  r.passed = ex_ok && violations == 0;
  return r;
}

// ---------------------------------------------------------------------------
// Expected geometric decay of coupled distances.

struct Prop2Config {
  double x = 0.40;
  double y = 0.42;
  std::uint64_t pairs = 10000;
  std::uint64_t n_min = 10;
  std::uint64_t n_max = 100;
  double ratio = 0.01;
  double confidence = 0.99;
  double quantile = 0.99;

  json echo() const {
    return {{"x", x}, {"y", y}, {"pairs", pairs}, {"n_min", n_min}, {"n_max", n_max},
            {"ratio", ratio}, {"confidence", confidence}, {"quantile", quantile}};
  }
};

struct LogLinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double slope_upper = 0.0;  // one-sided upper confidence bound
  std::size_t points = 0;
};

/// Least squares of log(values[n]) on n over [n_min, n_max].
inline LogLinearFit fit_log_linear(const std::vector<double>& values, std::size_t n_min, std::size_t n_max,
                                   double confidence) {
  if (!(n_min < n_max && n_max < values.size()) || n_max - n_min < 2)
    throw Error(ErrorKind::parameter, "fit range needs at least three points inside the series");
  for (std::size_t n = n_min; n <= n_max; ++n)
    if (!(values[n] > 0.0) || !std::isfinite(std::log(values[n])))
      throw Error(ErrorKind::degenerate_fit,
                  "series vanishes at n=" + std::to_string(n) + "; refit over a range ending before it");
  const double k = static_cast<double>(n_max - n_min + 1);
  double sx = 0, sy = 0;
  for (std::size_t n = n_min; n <= n_max; ++n) {
    sx += static_cast<double>(n);
    sy += std::log(values[n]);
  }
  const double mx = sx / k, my = sy / k;
  double sxx = 0, sxy = 0;
  for (std::size_t n = n_min; n <= n_max; ++n) {
    const double dx = static_cast<double>(n) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(values[n]) - my);
  }
  LogLinearFit f;
  f.points = static_cast<std::size_t>(k);
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double sse = 0;
  for (std::size_t n = n_min; n <= n_max; ++n) {
    const double e = std::log(values[n]) - (f.intercept + f.slope * static_cast<double>(n));
    sse += e * e;
  }
  f.slope_se = std::sqrt(sse / (k - 2.0) / sxx);
  const boost::math::students_t dist(k - 2.0);
  f.slope_upper = f.slope + boost::math::quantile(dist, confidence) * f.slope_se;
  return f;
}

inline ExperimentReport exp_prop2_decay(const ExperimentContext& ctx, const Prop2Config& cfg) {
  ExperimentReport r = detail::start_report(ctx, "prop2", cfg.echo());
  if (cfg.pairs == 0) throw Error(ErrorKind::parameter, "prop2: pairs must be positive");
  const std::size_t N = cfg.n_max + 1;
  const RngSpec base = experiment_stream(ctx, StreamTag::prop2);
  const auto devs = run_replicates<std::vector<double>>(cfg.pairs, ctx.threads, [&](std::size_t k) {
    Rng g({base.seed, stream_id({base.stream, k})});
    const CoupledPair cp = coupled_trajectory(cfg.x, cfg.y, cfg.n_max, ctx.system, ctx.field, g);
    std::vector<double> d(N);
    for (std::size_t n = 0; n < N; ++n) d[n] = std::abs(cp.x_states[n] - cp.y_states[n]);
    return d;
  });

  std::vector<double> mean(N, 0.0), quant(N, 0.0), column(cfg.pairs);
  const auto q_index = static_cast<std::size_t>(
      std::min<double>(static_cast<double>(cfg.pairs - 1), std::ceil(cfg.quantile * cfg.pairs) - 1.0));
  for (std::size_t n = 0; n < N; ++n) {
    double acc = 0.0;
    for (std::size_t k = 0; k < cfg.pairs; ++k) {
      acc += devs[k][n];
      column[k] = devs[k][n];
    }
    mean[n] = acc / static_cast<double>(cfg.pairs);
    std::nth_element(column.begin(), column.begin() + static_cast<std::ptrdiff_t>(q_index), column.end());
    quant[n] = column[q_index];
  }
  Series s{"prop2_decay", {"n", "D_n", "quantile"}, {}, true};
  for (std::size_t n = 0; n < N; ++n) s.rows.push_back({static_cast<double>(n), mean[n], quant[n]});
  r.series.push_back(std::move(s));
  r.metrics["D_0"] = mean[0];
  r.metrics["D_n_max"] = mean[cfg.n_max];

  if (cfg.x == cfg.y) {
    r.notes.push_back("identical starts: D_n = 0 for every n");
    r.passed = true;
    return r;
  }
  const LogLinearFit fit = fit_log_linear(mean, cfg.n_min, cfg.n_max, cfg.confidence);
  const LogLinearFit qfit = fit_log_linear(quant, cfg.n_min, cfg.n_max, cfg.confidence);
  const double ratio = mean[cfg.n_max] / mean[0];
  r.metrics["slope"] = fit.slope;
  r.metrics["slope_upper"] = fit.slope_upper;
  r.metrics["q_hat"] = std::exp(fit.slope);
  r.metrics["ratio"] = ratio;
  r.metrics["quantile/slope"] = qfit.slope;
  r.metrics["quantile/slope_upper"] = qfit.slope_upper;
  r.metrics["quantile/r_hat"] = std::exp(qfit.slope);
  r.notes.push_back("q_hat and r_hat are fitted rates, not constants of the theory");
  r.passed = fit.slope_upper < 0.0 && ratio < cfg.ratio && qfit.slope_upper < 0.0;
  return r;
}

// ---------------------------------------------------------------------------
// Uniform positive probability of reaching a neighbourhood of c.

struct ReachConfig {
  double rho = 0.05;
  double xi = 0.05;
  std::vector<std::uint64_t> ns{50, 100, 200};
  std::uint64_t runs = 10000;
  std::uint64_t x_points = 19;

  json echo() const {
    return {{"rho", rho}, {"xi", xi}, {"ns", ns}, {"runs", runs}, {"x_points", x_points}};
  }
};

inline ExperimentReport exp_reach_c(const ExperimentContext& ctx, const ReachConfig& cfg) {
  ExperimentReport r = detail::start_report(ctx, "reach", cfg.echo());
  if (!(cfg.xi > 0.0 && cfg.xi < 0.5) || !(cfg.rho > 0.0) || cfg.x_points < 2 || cfg.runs == 0 ||
      cfg.ns.empty())
    throw Error(ErrorKind::parameter, "reach: need 0 < xi < 1/2, rho > 0, x_points >= 2, runs > 0, ns");
  const double c = attractive_fixed_point(ctx.system);
  r.metrics["c"] = c;

  // Occupancy of [h, 1 - h], with M h^alpha < 1/8 taken from the certificate.
  const auto cert = detail::certificate_or_note(ctx, r);
  double h = std::numeric_limits<double>::quiet_NaN();
  if (cert) {
    h = std::fmin(0.49, 0.99 * std::pow(1.0 / (8.0 * cert->m_const), 1.0 / cert->alpha));
    r.metrics["h"] = h;
  }

  std::vector<std::uint64_t> ns = cfg.ns;
  std::sort(ns.begin(), ns.end());
  const std::uint64_t n_max = ns.back();
  const std::size_t K = ns.size();
  if (K > 32) throw Error(ErrorKind::parameter, "reach: at most 32 horizons");
  std::vector<double> floor(K, std::numeric_limits<double>::infinity());
  std::vector<double> occ_min(K, std::numeric_limits<double>::infinity());
  Series s{"reach", {"x", "n", "p_hat", "stderr", "occupancy"}, {}, false};

  for (std::uint64_t j = 0; j < cfg.x_points; ++j) {
    const double x = cfg.xi + (1.0 - 2.0 * cfg.xi) * static_cast<double>(j) / static_cast<double>(cfg.x_points - 1);
    const RngSpec base = experiment_stream(ctx, StreamTag::reach, {j});
    // Bit 2k: X_{ns[k]} near c; bit 2k+1: X_{ns[k]} in [h, 1-h].
    const auto hits = run_replicates<std::uint64_t>(cfg.runs, ctx.threads, [&](std::size_t k) {
      Rng g({base.seed, stream_id({base.stream, k})});
      std::uint64_t bits = 0;
      double state = x;
      std::size_t next = 0;
      for (std::uint64_t n = 1; n <= n_max; ++n) {
        state = step(state, ctx.system, ctx.field, g).next;
        while (next < K && ns[next] == n) {
          if (std::abs(state - c) < cfg.rho) bits |= 1ull << (2 * next);
          if (state >= h && state <= 1.0 - h) bits |= 1ull << (2 * next + 1);
          ++next;
        }
      }
      return bits;
    });
    for (std::size_t k = 0; k < K; ++k) {
      std::uint64_t near = 0, inside = 0;
      for (auto b : hits) {
        near += (b >> (2 * k)) & 1u;
        inside += (b >> (2 * k + 1)) & 1u;
      }
      const double R = static_cast<double>(cfg.runs);
      const double p = static_cast<double>(near) / R;
      const double se = std::sqrt(p * (1.0 - p) / R);
      const double occ = cert ? static_cast<double>(inside) / R : std::numeric_limits<double>::quiet_NaN();
      floor[k] = std::fmin(floor[k], p - 3.0 * se);
      if (cert) occ_min[k] = std::fmin(occ_min[k], occ);
      s.rows.push_back({x, static_cast<double>(ns[k]), p, se, occ});
    }
  }
  // m = smallest tested n from which every tested horizon has a positive floor.
  std::optional<std::uint64_t> m;
  for (std::size_t k = K; k-- > 0;) {
    if (!(floor[k] > 0.0)) break;
    m = ns[k];
  }
  for (std::size_t k = 0; k < K; ++k) {
    const std::string n = detail::key("n", static_cast<double>(ns[k]));
    r.metrics[n + "/floor"] = floor[k];
    if (cert) r.metrics[n + "/min_occupancy"] = occ_min[k];
  }
  r.metrics["m"] = m ? static_cast<double>(*m) : std::numeric_limits<double>::quiet_NaN();
  r.series.push_back(std::move(s));
  r.passed = m.has_value();
  return r;
}

// ---------------------------------------------------------------------------
// Stationary measure on the grid.

struct StationaryConfig {
  double tol = 1e-6;
  std::uint64_t max_iter = 100000;
  std::vector<double> starts{0.05, 0.95};
  std::uint64_t mc_steps = 1000000;
  double mc_start = 0.5;
  double mc_tol = 0.01;
  bool cesaro = false;
  double tail_tolerance = 1e-9;

  json echo() const {
    return {{"tol", tol}, {"max_iter", max_iter}, {"starts", starts}, {"mc_steps", mc_steps},
            {"mc_start", mc_start}, {"mc_tol", mc_tol}, {"cesaro", cesaro}, {"tail_tolerance", tail_tolerance}};
  }
};

struct StationaryOutcome {
  ExperimentReport report;
  std::optional<GridMeasure> mu_star;  // fixed point from the first start
};

inline Series measure_series(const std::string& name, const GridMeasure& mu) {
  Series s{name, {"bin_lo", "bin_hi", "mass"}, {}, false};
  const Grid& g = mu.grid();
  const auto m = mu.mass();
  for (std::size_t k = 0; k < g.n_bins(); ++k) s.rows.push_back({g.lo(k), g.hi(k), m[k]});
  return s;
}

inline Series function_series(const std::string& name, const GridFunction& f) {
  Series s{name, {"x", "value"}, {}, false};
  const auto edges = f.grid().edges();
  for (std::size_t i = 0; i < edges.size(); ++i) s.rows.push_back({edges[i], f(edges[i])});
  return s;
}

/// The first `limit` steps of a trajectory as (step, state, branch).
inline Series trajectory_series(const std::string& name, const Trajectory& t, std::size_t limit) {
  Series s{name, {"step", "state", "branch"}, {}, false};
  const std::size_t n = std::min(limit, t.branches.size());
  s.rows.push_back({0.0, t.states[0], std::numeric_limits<double>::quiet_NaN()});
  for (std::size_t k = 1; k <= n; ++k)
    s.rows.push_back({static_cast<double>(k), t.states[k], static_cast<double>(index(t.branches[k - 1]))});
  return s;
}

inline StationaryOutcome run_stationary(const ExperimentContext& ctx, const StationaryConfig& cfg) {
  StationaryOutcome out{detail::start_report(ctx, "stationary", cfg.echo(), true), std::nullopt};
  ExperimentReport& r = out.report;
  if (cfg.starts.empty()) throw Error(ErrorKind::parameter, "stationary: need at least one start");
  const auto cert = detail::certificate_or_note(ctx, r);

  const GridPtr grid = make_grid(ctx.grid_n, ctx.system);
  const UlamOperator op(grid, ctx.system, ctx.field);
  r.metrics["grid_bins"] = static_cast<double>(grid->n_bins());
  r.metrics["redistribution_error"] = op.redistribution_error();

  std::vector<PowerResult> fixed;
  bool all_converged = true;
  for (std::size_t k = 0; k < cfg.starts.size(); ++k) {
    PowerResult pr = power_iterate(GridMeasure::point_like(grid, cfg.starts[k]), cfg.tol, cfg.max_iter, op,
                                   PowerOptions{cfg.cesaro});
    const std::string p = "start" + std::to_string(k) + "/";
    r.metrics[p + "iterations"] = static_cast<double>(pr.iters);
    r.metrics[p + "residual"] = pr.residual;
    r.metrics[p + "error_estimate"] = pr.error_estimate;
    all_converged = all_converged && pr.converged;
    if (!pr.converged) r.notes.push_back("power iteration from start " + format_double(cfg.starts[k]) + " did not converge");
    fixed.push_back(std::move(pr));
  }
  double mutual_ks = 0.0, mutual_w1 = 0.0;
  for (std::size_t a = 0; a < fixed.size(); ++a)
    for (std::size_t b = a + 1; b < fixed.size(); ++b) {
      mutual_ks = std::fmax(mutual_ks, kolmogorov_distance(fixed[a].mu_star, fixed[b].mu_star));
      mutual_w1 = std::fmax(mutual_w1, wasserstein1(fixed[a].mu_star, fixed[b].mu_star));
    }
  r.metrics["mutual_ks"] = mutual_ks;
  r.metrics["mutual_w1"] = mutual_w1;
  const GridMeasure& mu = fixed.front().mu_star;
  r.metrics["mean_ulam"] = mu.mean();

  bool tail_ok = false;
  if (cert) {
    const TailCheck tc = tail_class_member(mu, cert->m_const, cert->alpha, cfg.tail_tolerance);
    tail_ok = tc.ok;
    r.metrics["tail_worst_ratio"] = tc.worst_ratio;
  }

  Rng g(experiment_stream(ctx, StreamTag::stationary));
  const Trajectory t = trajectory(cfg.mc_start, cfg.mc_steps, ctx.system, ctx.field, g);
  const EmpiricalMeasure em(std::vector<double>(t.states.begin() + 1, t.states.end()));
  const double mc_ks = kolmogorov_distance(mu, em);
  r.metrics["mc_ks"] = mc_ks;
  r.metrics["mean_mc"] = em.mean();

  r.series.push_back(measure_series("stationary_measure", mu));
  r.series.push_back(trajectory_series("trajectory", t, 1000));
  r.passed = all_converged && mutual_ks < 2.0 * cfg.tol && tail_ok && mc_ks < cfg.mc_tol;
  out.mu_star = mu;
  return out;
}

inline ExperimentReport exp_stationary(const ExperimentContext& ctx, const StationaryConfig& cfg) {
  return run_stationary(ctx, cfg).report;
}

// ---------------------------------------------------------------------------
// Asymptotic stability of the grid operator.

struct StabilityConfig {
  std::uint64_t horizon = 200;
  double tol = 0.01;
  double monotone_tol = 1e-9;
  std::vector<double> starts{0.05, 0.95};
  std::vector<std::uint64_t> report_at{1, 2, 5, 10, 20, 50, 100, 200};
  // With place-dependent fields the Kolmogorov distance can rise briefly;
  // switching this off reports the rise without failing on it.
  bool require_monotone = true;

  json echo() const {
    return {{"horizon", horizon}, {"tol", tol}, {"monotone_tol", monotone_tol}, {"starts", starts},
            {"report_at", report_at}, {"require_monotone", require_monotone}};
  }
};

inline ExperimentReport exp_stability(const ExperimentContext& ctx, const StabilityConfig& cfg) {
  ExperimentReport r = detail::start_report(ctx, "stability", cfg.echo(), true);
  if (cfg.starts.size() != 2) throw Error(ErrorKind::parameter, "stability: need exactly two starts");
  const GridPtr grid = make_grid(ctx.grid_n, ctx.system);
  const UlamOperator op(grid, ctx.system, ctx.field);
  GridMeasure a = GridMeasure::point_like(grid, cfg.starts[0]);
  GridMeasure b = GridMeasure::point_like(grid, cfg.starts[1]);

  Series s{"stability", {"n", "ks", "w1"}, {}, true};
  std::vector<double> ks;
  for (std::uint64_t n = 0; n <= cfg.horizon; ++n) {
    ks.push_back(kolmogorov_distance(a, b));
    const double w1 = wasserstein1(a, b);
    s.rows.push_back({static_cast<double>(n), ks.back(), w1});
    if (std::find(cfg.report_at.begin(), cfg.report_at.end(), n) != cfg.report_at.end()) {
      r.metrics[detail::key("n", static_cast<double>(n)) + "/ks"] = ks.back();
      r.metrics[detail::key("n", static_cast<double>(n)) + "/w1"] = w1;
    }
    if (n < cfg.horizon) {
      a = op.push(a);
      b = op.push(b);
    }
  }
  const auto peak = static_cast<std::size_t>(std::max_element(ks.begin(), ks.end()) - ks.begin());
  double rise = 0.0;
  for (std::size_t n = peak + 1; n < ks.size(); ++n) rise = std::fmax(rise, ks[n] - ks[n - 1]);
  r.metrics["peak_n"] = static_cast<double>(peak);
  r.metrics["peak_ks"] = ks[peak];
  r.metrics["max_rise_after_peak"] = rise;
  r.metrics["final_ks"] = ks.back();
  r.series.push_back(std::move(s));
  r.passed = ks.back() < cfg.tol && (!cfg.require_monotone || rise <= cfg.monotone_tol);
  return r;
}

// ---------------------------------------------------------------------------
// Birkhoff averages against the grid stationary measure.

struct SllnConfig {
  std::vector<double> starts{0.1, 0.5, 0.9};
  std::uint64_t steps = 1000000;
  double tol = 0.005;
  std::vector<std::string> functions{"x", "x2", "smooth_indicator_c"};
  std::uint64_t seeds = 2;
  double smoothing = 0.01;
  double stationary_tol = 1e-6;
  std::uint64_t max_iter = 100000;

  json echo() const {
    return {{"starts", starts}, {"steps", steps}, {"tol", tol}, {"functions", functions}, {"seeds", seeds},
            {"smoothing", smoothing}, {"stationary_tol", stationary_tol}, {"max_iter", max_iter}};
  }
};

/// mu_star may be supplied from a stationary run on the same grid; otherwise
/// it is computed here by power iteration from the uniform measure.
inline ExperimentReport exp_slln(const ExperimentContext& ctx, const SllnConfig& cfg,
                                 const GridMeasure* mu_star = nullptr) {
  ExperimentReport r = detail::start_report(ctx, "slln", cfg.echo(), true);
  if (cfg.steps == 0 || cfg.seeds == 0 || cfg.starts.empty() || cfg.functions.empty())
    throw Error(ErrorKind::parameter, "slln: need steps, seeds, starts and functions");
  const double c = attractive_fixed_point(ctx.system);
  std::vector<TestFunction> fns;
  for (const auto& name : cfg.functions) fns.push_back(make_test_function(name, c, cfg.smoothing));

  std::optional<GridMeasure> own;
  if (mu_star == nullptr) {
    const GridPtr grid = make_grid(ctx.grid_n, ctx.system);
    PowerResult pr = power_iterate(GridMeasure::uniform(grid), cfg.stationary_tol, cfg.max_iter, ctx.system,
                                   ctx.field);
    if (!pr.converged) {
      r.notes.push_back("stationary measure did not converge");
      return r;
    }
    own = std::move(pr.mu_star);
    mu_star = &*own;
  }
  std::vector<double> target;
  for (const auto& f : fns) {
    target.push_back(integrate(GridFunction::sample(mu_star->grid_ptr(), f.fn), *mu_star));
    r.metrics[f.name + "/ulam"] = target.back();
  }

  // averages[seed][start][function]
  const std::size_t S = cfg.starts.size(), F = fns.size();
  const auto runs = run_replicates<std::vector<double>>(cfg.seeds * S, ctx.threads, [&](std::size_t k) {
    const std::size_t seed_idx = k / S, start_idx = k % S;
    Rng g(experiment_stream(ctx, StreamTag::slln, {seed_idx, start_idx}));
    std::vector<double> acc(F, 0.0);
    double state = cfg.starts[start_idx];
    if (!(state > 0.0 && state < 1.0)) throw Error(ErrorKind::domain, "slln: start outside (0,1)");
    for (std::uint64_t n = 0; n < cfg.steps; ++n) {
      state = step(state, ctx.system, ctx.field, g).next;
      for (std::size_t f = 0; f < F; ++f) acc[f] += fns[f].fn(state);
    }
    for (double& a : acc) a /= static_cast<double>(cfg.steps);
    return acc;
  });

  bool ok = true;
  double worst = 0.0, worst_seed_gap = 0.0;
  Series s{"slln", {"seed", "start", "function", "average", "ulam", "difference"}, {}, false};
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const std::size_t seed_idx = k / S, start_idx = k % S;
    for (std::size_t f = 0; f < F; ++f) {
      const double avg = runs[k][f];
      const double diff = avg - target[f];
      worst = std::fmax(worst, std::abs(diff));
      ok = ok && std::abs(diff) < cfg.tol;
      r.metrics["seed" + std::to_string(seed_idx) + "/" + detail::key("start", cfg.starts[start_idx]) + "/" +
                fns[f].name] = avg;
      s.rows.push_back({static_cast<double>(seed_idx), cfg.starts[start_idx], static_cast<double>(f), avg,
                        target[f], diff});
      if (seed_idx > 0) {
        const double gap = std::abs(avg - runs[start_idx][f]);
        worst_seed_gap = std::fmax(worst_seed_gap, gap);
        ok = ok && gap < 2.0 * cfg.tol;
      }
    }
  }
  r.metrics["worst_difference"] = worst;
  r.metrics["worst_seed_gap"] = worst_seed_gap;
  r.series.push_back(std::move(s));
  r.passed = ok;
  return r;
}

// ---------------------------------------------------------------------------
// Equicontinuity of U^n phi near c.

struct EquicontinuityConfig {
  std::uint64_t horizon = 100;
  std::vector<double> ds{1e-1, 1e-2, 1e-3};
  std::string function = "x";
  double probe_radius = 0.0;       // 0 selects eta1 / 2, keeping all probe pairs inside the coupling radius
  std::uint64_t probe_subdivision = 8;  // probe spacing = min(ds) / probe_subdivision
  double bound_factor = 1.5;       // bound(d) = bound_factor * a1 * Lip(phi) * d

  json echo() const {
    return {{"horizon", horizon}, {"ds", ds}, {"function", function}, {"probe_radius", probe_radius},
            {"probe_subdivision", probe_subdivision}, {"bound_factor", bound_factor}};
  }
};

/// sup |u(x_i) - u(x_j)| over probe indices with |i - j| <= K.
inline double windowed_oscillation(const std::vector<double>& u, std::size_t K) {
  double best = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    double lo = u[i], hi = u[i];
    for (std::size_t j = i + 1; j < u.size() && j - i <= K; ++j) {
      lo = std::fmin(lo, u[j]);
      hi = std::fmax(hi, u[j]);
    }
    best = std::fmax(best, hi - lo);
  }
  return best;
}

inline ExperimentReport exp_equicontinuity(const ExperimentContext& ctx, const EquicontinuityConfig& cfg) {
  ExperimentReport r = detail::start_report(ctx, "equicontinuity", cfg.echo(), true);
  if (cfg.ds.empty() || cfg.probe_subdivision == 0)
    throw Error(ErrorKind::parameter, "equicontinuity: need ds and a positive probe subdivision");
  std::vector<double> ds = cfg.ds;
  std::sort(ds.begin(), ds.end(), std::greater<>());
  if (!(ds.back() > 0.0)) throw Error(ErrorKind::parameter, "equicontinuity: d must be positive");

  const SystemParams& s = ctx.system;
  const double c = attractive_fixed_point(s);
  const TestFunction tf = make_test_function(cfg.function, c);
  const double radius = cfg.probe_radius > 0.0 ? cfg.probe_radius : 0.5 * admissible_eta1(s);
  const double spacing = ds.back() / static_cast<double>(cfg.probe_subdivision);
  const double lo = std::fmax(c - radius, 0.0), hi = std::fmin(c + radius, 1.0);
  std::vector<double> probes;
  for (std::size_t i = 0; lo + static_cast<double>(i) * spacing <= hi; ++i)
    probes.push_back(lo + static_cast<double>(i) * spacing);
  r.metrics["probe_radius"] = radius;
  r.metrics["probe_count"] = static_cast<double>(probes.size());

  std::vector<std::size_t> offsets;
  for (double d : ds) offsets.push_back(static_cast<std::size_t>(std::floor(d / spacing * (1.0 + 1e-12))));

  const GridPtr grid = make_grid(ctx.grid_n, s);
  GridFunction u = GridFunction::sample(grid, tf.fn);
  std::vector<std::string> cols{"n"};
  for (double d : ds) cols.push_back(detail::key("d", d));
  Series series{"equicontinuity", cols, {}, true};
  std::vector<double> sup_n(ds.size(), 0.0);
  bool monotone = true;
  std::vector<double> values(probes.size());
  for (std::uint64_t n = 0; n <= cfg.horizon; ++n) {
    for (std::size_t i = 0; i < probes.size(); ++i) values[i] = u(probes[i]);
    std::vector<double> row{static_cast<double>(n)};
    for (std::size_t k = 0; k < ds.size(); ++k) {
      const double mod = windowed_oscillation(values, offsets[k]);
      row.push_back(mod);
      sup_n[k] = std::fmax(sup_n[k], mod);
      if (k > 0 && mod > row[k] + 1e-15) monotone = false;
    }
    series.rows.push_back(std::move(row));
    if (n < cfg.horizon) u = apply_dual(u, s, ctx.field);
  }
  bool bounded = true;
  for (std::size_t k = 0; k < ds.size(); ++k) {
    const double bound = cfg.bound_factor * s.a1() * tf.lipschitz * ds[k];
    r.metrics[detail::key("d", ds[k]) + "/sup_over_n"] = sup_n[k];
    r.metrics[detail::key("d", ds[k]) + "/bound"] = bound;
    bounded = bounded && sup_n[k] <= bound;
  }
  r.series.push_back(std::move(series));
  r.series.push_back(function_series("equicontinuity_function", u));
  r.passed = monotone && bounded;
  return r;
}

}  // namespace amz
