#pragma once

// The two piecewise-linear interval homeomorphisms and the constants derived
// from the breakpoint (x0, y0):
//
//   f0(x) = a0 x               for x <= x0
//         = a1 (x - 1) + 1     for x >  x0
//   f1(x) = 1 - f0(1 - x)
//
// with a0 = y0/x0 < 1 < a1 = (1-y0)/(1-x0).
//
// The branches are evaluated as y0*(x/x0) and 1 - (1-y0)*((1-x)/(1-x0)) so
// that the kink is hit exactly: f0(x0) == y0 under either formula. f1 has its
// own closed form near 0 instead of going through 1 - f0(1 - x), which would
// lose all relative precision for tiny x.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "amz/branch.hpp"
#include "amz/error.hpp"
#include "amz/prob_field.hpp"

namespace amz {

namespace diagnostics {

inline std::atomic<std::uint64_t>& clamp_counter() {
  static std::atomic<std::uint64_t> counter{0};
  return counter;
}

/// Number of map evaluations whose rounded result left (0,1) and was clamped.
inline std::uint64_t clamp_count() { return clamp_counter().load(std::memory_order_relaxed); }
inline void reset_clamp_count() { clamp_counter().store(0, std::memory_order_relaxed); }

}  // namespace diagnostics

/// Returns an empty string when (x0, y0) satisfies (A1), otherwise the violated bound.
inline std::string a1_violation(double x0, double y0) {
  if (!(x0 > 0.5)) return "x0 must be > 1/2";
  if (!(x0 < 1.0)) return "x0 must be < 1";
  if (!(y0 >= 0.5)) return "y0 must be >= 1/2";
  if (!(y0 < x0)) return "y0 must be < x0";
  return {};
}

class SystemParams {
 public:
  /// Any breakpoint in the open unit square; (A1) is not enforced.
  static SystemParams unchecked(double x0, double y0) {
    if (!(x0 > 0.0 && x0 < 1.0 && y0 > 0.0 && y0 < 1.0))
      throw Error(ErrorKind::domain, "breakpoint (x0, y0) must lie in (0,1)^2");
    return SystemParams(x0, y0);
  }

  double x0() const { return x0_; }
  double y0() const { return y0_; }
  double a0() const { return y0_ / x0_; }
  double a1() const { return (1.0 - y0_) / (1.0 - x0_); }
  double slope(Branch b) const { return b == Branch::f0 ? a0() : a1(); }

  bool satisfies_a1() const { return a1_violation(x0_, y0_).empty(); }

  bool operator==(const SystemParams&) const = default;

 private:
  SystemParams(double x0, double y0) : x0_(x0), y0_(y0) {}
  double x0_;
  double y0_;
};

/// Builds the system, rejecting breakpoints outside (A1).
inline SystemParams derive_slopes(double x0, double y0) {
  if (auto why = a1_violation(x0, y0); !why.empty())
    throw Error(ErrorKind::reject_out_of_region, "(A1) violated: " + why);
  return SystemParams::unchecked(x0, y0);
}

namespace detail {

// Closed-interval evaluations used by the grid operators (edges include 0, 1).
inline double f0_closed(const SystemParams& s, double x) {
  if (x <= s.x0()) return s.y0() * (x / s.x0());
  return 1.0 - (1.0 - s.y0()) * ((1.0 - x) / (1.0 - s.x0()));
}

inline double f1_closed(const SystemParams& s, double x) {
  const double k = 1.0 - s.x0();
  if (x < k) return (1.0 - s.y0()) * (x / k);
  return 1.0 - s.y0() * ((1.0 - x) / s.x0());
}

inline double map_closed(const SystemParams& s, Branch b, double x) {
  return b == Branch::f0 ? f0_closed(s, x) : f1_closed(s, x);
}

inline double f0_inverse(const SystemParams& s, double y) {
  if (y <= s.y0()) return s.x0() * (y / s.y0());
  return 1.0 - (1.0 - s.x0()) * ((1.0 - y) / (1.0 - s.y0()));
}

inline double f1_inverse(const SystemParams& s, double y) {
  const double k = 1.0 - s.y0();
  if (y < k) return (1.0 - s.x0()) * (y / k);
  return 1.0 - s.x0() * ((1.0 - y) / s.y0());
}

inline double clamp_open(double v) {
  if (v <= 0.0) {
    diagnostics::clamp_counter().fetch_add(1, std::memory_order_relaxed);
    return std::numeric_limits<double>::denorm_min();
  }
  if (v >= 1.0) {
    diagnostics::clamp_counter().fetch_add(1, std::memory_order_relaxed);
    return std::nextafter(1.0, 0.0);
  }
  return v;
}

}  // namespace detail

/// f_b(x) for x in (0,1); the result is kept strictly inside (0,1).
inline double apply_map(const SystemParams& s, Branch b, double x) {
  if (!(x > 0.0 && x < 1.0)) throw Error(ErrorKind::domain, "apply_map: x outside (0,1)");
  return detail::clamp_open(detail::map_closed(s, b, x));
}

/// Unique preimage of y under f_b.
inline double invert_map(const SystemParams& s, Branch b, double y) {
  if (!(y > 0.0 && y < 1.0)) throw Error(ErrorKind::domain, "invert_map: y outside (0,1)");
  const double x = b == Branch::f0 ? detail::f0_inverse(s, y) : detail::f1_inverse(s, y);
  return detail::clamp_open(x);
}

struct LyapunovExponents {
  double lambda0 = 0.0;  // average log-slope at 0, nats per step
  double lambda1 = 0.0;  // average log-slope at 1
};

inline LyapunovExponents lyapunov_exponents(const SystemParams& s, const ProbField& field) {
  const double la0 = std::log(s.a0());
  const double la1 = std::log(s.a1());
  return {field.p(Branch::f0, 0.0) * la0 + field.p(Branch::f1, 0.0) * la1,
          field.p(Branch::f0, 1.0) * la1 + field.p(Branch::f1, 1.0) * la0};
}

/// Fixed point of f0 o f1 on [1-x0, y0]; closed form y0/(x0+y0), checked
/// against its defining equation.
inline double attractive_fixed_point(const SystemParams& s) {
  const double c = s.y0() / (s.x0() + s.y0());
  const double lo = 1.0 - s.x0();
  const double residual = std::abs(detail::f0_closed(s, detail::f1_closed(s, c)) - c);
  if (!(c > lo && c < s.y0()) || !(residual <= 1e-12))
    throw Error(ErrorKind::consistency,
                "fixed point of f0 o f1 is not an interior attractor of [1-x0, y0]; (A1) fails");
  return c;
}

/// The three closed-form upper bounds on the coupling radius eta1.
struct Eta1Bounds {
  double slope_condition = 0.0;  // a0 y - a1 (y - a1 eta) < 0 for y >= 1 - y0
  double image_condition = 0.0;  // f1(y0 + a1 eta) < x0
  double gap_condition = 0.0;    // eta < x0 - y0
  double min() const { return std::fmin(slope_condition, std::fmin(image_condition, gap_condition)); }
};

inline Eta1Bounds eta1_bounds(const SystemParams& s) {
  const double a0 = s.a0();
  const double a1 = s.a1();
  return {(1.0 - s.y0()) * (a1 - a0) / (a1 * a1),
          (s.x0() - detail::f1_closed(s, s.y0())) / (a0 * a1), s.x0() - s.y0()};
}

inline constexpr double kEta1SafetyFactor = 0.99;

/// Strict checks of the three coupling-radius conditions at a given eta.
inline bool eta1_admissible(const SystemParams& s, double eta) {
  const double a0 = s.a0();
  const double a1 = s.a1();
  const double y = 1.0 - s.y0();
  if (!(eta > 0.0)) return false;
  if (!(a0 * y - a1 * (y - a1 * eta) < 0.0)) return false;
  const double probe = s.y0() + a1 * eta;
  if (!(probe < 1.0) || !(detail::f1_closed(s, probe) < s.x0())) return false;
  return eta < s.x0() - s.y0();
}

/// 0.99 * min of the three bounds; re-verified numerically before returning.
inline double admissible_eta1(const SystemParams& s) {
  const Eta1Bounds b = eta1_bounds(s);
  if (!(b.slope_condition > 0.0) || !(b.image_condition > 0.0) || !(b.gap_condition > 0.0))
    throw Error(ErrorKind::infeasible, "no positive coupling radius: (A1) or f1(y0) < x0 fails");
  const double eta = kEta1SafetyFactor * b.min();
  if (!eta1_admissible(s, eta))
    throw Error(ErrorKind::infeasible, "coupling radius failed numeric re-verification");
  return eta;
}

struct AssumptionReport {
  bool a1_ok = false;
  bool a2_ok = false;
  bool a3_ok = false;
  bool a4_ok = false;
  double lambda0 = 0.0;
  double lambda1 = 0.0;
  std::string detail[4];

  bool all_ok() const { return a1_ok && a2_ok && a3_ok && a4_ok; }
};

inline AssumptionReport validate_assumptions(const SystemParams& s, const ProbField& field) {
  AssumptionReport r;
  const std::string why = a1_violation(s.x0(), s.y0());
  r.a1_ok = why.empty();
  r.detail[0] = r.a1_ok ? "ok" : why;

  const FieldReport fr = validate_field(field);
  r.a2_ok = fr.dini_ok;
  r.a3_ok = fr.bounds_ok;
  auto join = [&](bool ok) {
    if (ok) return std::string("ok");
    std::string msg;
    for (const auto& d : fr.diagnostics) msg += (msg.empty() ? "" : "; ") + d;
    return msg;
  };
  r.detail[1] = join(r.a2_ok);
  r.detail[2] = join(r.a3_ok);

  const LyapunovExponents le = lyapunov_exponents(s, field);
  r.lambda0 = le.lambda0;
  r.lambda1 = le.lambda1;
  r.a4_ok = le.lambda0 > 0.0 && le.lambda1 > 0.0;
  if (r.a4_ok) {
    r.detail[3] = "ok";
  } else {
    r.detail[3] = "average Lyapunov exponent not positive at " +
                  std::string(le.lambda0 > 0.0 ? "1" : "0") +
                  " (lambda0=" + std::to_string(le.lambda0) +
                  ", lambda1=" + std::to_string(le.lambda1) + ")";
  }
  return r;
}

}  // namespace amz
