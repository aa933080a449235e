#pragma once

// Place-dependent probability pairs (p0, p1 = 1 - p0) on [0,1].
//
// Four Lipschitz families are supported; each one admits closed-form
// extrema over an interval, so suprema, infima and the floor
// min(inf p0, inf p1) are computed exactly by candidate-point inspection
// rather than sampling.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "amz/branch.hpp"
#include "amz/error.hpp"

namespace amz {

struct ConstantFamily {
  double p = 0.5;
  bool operator==(const ConstantFamily&) const = default;
};

/// p0(x) = v0 + (v1 - v0) x
struct AffineFamily {
  double v0 = 0.5;
  double v1 = 0.5;
  bool operator==(const AffineFamily&) const = default;
};

/// Linear interpolation through (x, p0(x)) knots; first knot at 0, last at 1.
struct PiecewiseLinearFamily {
  std::vector<std::pair<double, double>> points;
  bool operator==(const PiecewiseLinearFamily&) const = default;
};

/// p0(x) = low + (high - low) / (1 + exp(-steepness (x - center)))
struct LogisticFamily {
  double center = 0.5;
  double steepness = 1.0;
  double low = 0.25;
  double high = 0.75;
  bool operator==(const LogisticFamily&) const = default;
};

using FieldFamily =
    std::variant<ConstantFamily, AffineFamily, PiecewiseLinearFamily, LogisticFamily>;

class ProbField {
 public:
  explicit ProbField(FieldFamily family, std::optional<double> declared_delta = std::nullopt,
                     std::optional<double> declared_lipschitz = std::nullopt)
      : family_(std::move(family)),
        declared_delta_(declared_delta),
        declared_lipschitz_(declared_lipschitz) {
    check_structure();
  }

  static ProbField constant(double p) { return ProbField(ConstantFamily{p}); }
  static ProbField affine(double v0, double v1) { return ProbField(AffineFamily{v0, v1}); }
  static ProbField piecewise_linear(std::vector<std::pair<double, double>> points) {
    return ProbField(PiecewiseLinearFamily{std::move(points)});
  }
  static ProbField logistic(double center, double steepness, double low, double high) {
    return ProbField(LogisticFamily{center, steepness, low, high});
  }

  const FieldFamily& family() const { return family_; }
  std::optional<double> declared_delta() const { return declared_delta_; }
  std::optional<double> declared_lipschitz() const { return declared_lipschitz_; }

  std::string_view family_name() const {
    static constexpr std::string_view names[] = {"constant", "affine", "piecewise_linear",
                                                 "logistic"};
    return names[family_.index()];
  }

  /// p0 at x in [0,1]; no domain check (callers in hot loops stay inside).
  double p0(double x) const {
    return std::visit([x](const auto& f) { return eval(f, x); }, family_);
  }

  double p(Branch b, double x) const { return b == Branch::f0 ? p0(x) : 1.0 - p0(x); }

  /// Points of [lo, hi] at which the extrema of p0 are attained.
  std::vector<double> candidates(double lo, double hi) const {
    std::vector<double> out{lo, hi};
    if (const auto* pl = std::get_if<PiecewiseLinearFamily>(&family_)) {
      for (const auto& [x, v] : pl->points) {
        if (x > lo && x < hi) out.push_back(x);
      }
    }
    return out;
  }

  /// Exact Lipschitz constant (constant, affine, piecewise linear) or the
  /// global slope bound steepness*(high-low)/4 (logistic).
  double exact_lipschitz() const {
    return std::visit(
        [](const auto& f) -> double {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, ConstantFamily>) {
            return 0.0;
          } else if constexpr (std::is_same_v<T, AffineFamily>) {
            return std::abs(f.v1 - f.v0);
          } else if constexpr (std::is_same_v<T, PiecewiseLinearFamily>) {
            double lip = 0.0;
            for (std::size_t i = 1; i < f.points.size(); ++i) {
              const double dx = f.points[i].first - f.points[i - 1].first;
              lip = std::max(lip, std::abs(f.points[i].second - f.points[i - 1].second) / dx);
            }
            return lip;
          } else {
            return std::abs(f.steepness) * std::abs(f.high - f.low) / 4.0;
          }
        },
        family_);
  }

  double lipschitz() const { return declared_lipschitz_.value_or(exact_lipschitz()); }

  bool operator==(const ProbField&) const = default;

 private:
  static double eval(const ConstantFamily& f, double) { return f.p; }
  static double eval(const AffineFamily& f, double x) { return f.v0 + (f.v1 - f.v0) * x; }
  static double eval(const PiecewiseLinearFamily& f, double x) {
    const auto& pts = f.points;
    auto it = std::upper_bound(pts.begin(), pts.end(), x,
                               [](double v, const auto& pt) { return v < pt.first; });
    if (it == pts.begin()) return pts.front().second;
    if (it == pts.end()) return pts.back().second;
    const auto& [xa, va] = *(it - 1);
    const auto& [xb, vb] = *it;
    return va + (vb - va) * ((x - xa) / (xb - xa));
  }
  static double eval(const LogisticFamily& f, double x) {
    return f.low + (f.high - f.low) / (1.0 + std::exp(-f.steepness * (x - f.center)));
  }

  void check_structure() const {
    auto finite = [](double v) { return std::isfinite(v); };
    auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    std::visit(
        [&](const auto& f) {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, ConstantFamily>) {
            if (!finite(f.p) || !in_unit(f.p))
              throw Error(ErrorKind::invalid_field, "constant p must lie in [0,1]");
          } else if constexpr (std::is_same_v<T, AffineFamily>) {
            if (!in_unit(f.v0) || !in_unit(f.v1))
              throw Error(ErrorKind::invalid_field, "affine end values must lie in [0,1]");
          } else if constexpr (std::is_same_v<T, PiecewiseLinearFamily>) {
            const auto& pts = f.points;
            if (pts.size() < 2)
              throw Error(ErrorKind::invalid_field, "piecewise_linear needs at least two knots");
            if (pts.front().first != 0.0 || pts.back().first != 1.0)
              throw Error(ErrorKind::invalid_field, "piecewise_linear knots must cover [0,1]");
            for (std::size_t i = 0; i < pts.size(); ++i) {
              if (!in_unit(pts[i].second))
                throw Error(ErrorKind::invalid_field, "piecewise_linear values must lie in [0,1]");
              if (i > 0 && !(pts[i].first > pts[i - 1].first))
                throw Error(ErrorKind::invalid_field,
                            "piecewise_linear knots must be strictly increasing");
            }
          } else {
            if (!finite(f.center) || !finite(f.steepness) || !in_unit(f.low) ||
                !in_unit(f.high))
              throw Error(ErrorKind::invalid_field,
                          "logistic needs finite center/steepness and low, high in [0,1]");
          }
        },
        family_);
    if (declared_delta_ && !std::isfinite(*declared_delta_))
      throw Error(ErrorKind::invalid_field, "declared delta must be finite");
    if (declared_lipschitz_ && !(*declared_lipschitz_ >= 0.0))
      throw Error(ErrorKind::invalid_field, "declared lipschitz must be a nonnegative number");
  }

  FieldFamily family_;
  std::optional<double> declared_delta_;
  std::optional<double> declared_lipschitz_;
};

inline void require_unit_interval(double lo, double hi, std::string_view what) {
  if (!(lo >= 0.0 && lo <= hi && hi <= 1.0))
    throw Error(ErrorKind::domain, std::string(what) + ": need 0 <= lo <= hi <= 1");
}

inline double eval_p0(const ProbField& field, double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw Error(ErrorKind::domain, "eval_p0: x outside [0,1]");
  return field.p0(x);
}

inline double eval_p(const ProbField& field, Branch b, double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw Error(ErrorKind::domain, "eval_p: x outside [0,1]");
  return field.p(b, x);
}

/// Exact supremum of p_i over [lo, hi].
inline double interval_sup(const ProbField& field, Branch b, double lo, double hi) {
  require_unit_interval(lo, hi, "interval_sup");
  double best = -std::numeric_limits<double>::infinity();
  for (double x : field.candidates(lo, hi)) best = std::max(best, field.p(b, x));
  return best;
}

/// Exact infimum of p_i over [lo, hi].
inline double interval_inf(const ProbField& field, Branch b, double lo, double hi) {
  require_unit_interval(lo, hi, "interval_inf");
  double best = std::numeric_limits<double>::infinity();
  for (double x : field.candidates(lo, hi)) best = std::min(best, field.p(b, x));
  return best;
}

/// min over [0,1] of min(p0, p1).
inline double probability_floor(const ProbField& field) {
  return std::min(interval_inf(field, Branch::f0, 0.0, 1.0),
                  interval_inf(field, Branch::f1, 0.0, 1.0));
}

/// Upper bound on the modulus of continuity: min(L t, 1).
inline double modulus_bound(const ProbField& field, double t) {
  if (!(t >= 0.0)) throw Error(ErrorKind::domain, "modulus_bound: t must be >= 0");
  return std::min(field.lipschitz() * t, 1.0);
}

struct FieldReport {
  bool ok = false;
  bool dini_ok = false;    // (A2): Lipschitz with a valid declared bound
  bool bounds_ok = false;  // (A3): 0 < p_i < 1 with a valid declared floor
  double floor = 0.0;
  double exact_lipschitz = 0.0;
  std::vector<std::string> diagnostics;
};

inline FieldReport validate_field(const ProbField& field) {
  FieldReport r;
  r.floor = probability_floor(field);
  r.exact_lipschitz = field.exact_lipschitz();

  r.bounds_ok = r.floor > 0.0;
  if (!r.bounds_ok) {
    r.diagnostics.push_back("(A3) fails: min(p0, p1) over [0,1] is " + std::to_string(r.floor));
  }
  if (auto d = field.declared_delta()) {
    if (!(*d > 0.0) || *d > r.floor) {
      r.bounds_ok = false;
      r.diagnostics.push_back("declared delta " + std::to_string(*d) +
                              " is not a valid floor (exact floor " + std::to_string(r.floor) +
                              ")");
    }
  }

  // Every supported family is Lipschitz, so sum_n beta(C t^n) <= L C / (1 - t).
  r.dini_ok = std::isfinite(r.exact_lipschitz);
  if (auto lip = field.declared_lipschitz()) {
    const double slack = 1e-12 * std::max(1.0, r.exact_lipschitz);
    if (*lip < r.exact_lipschitz - slack) {
      r.dini_ok = false;
      r.diagnostics.push_back("declared lipschitz " + std::to_string(*lip) +
                              " is below the family bound " +
                              std::to_string(r.exact_lipschitz));
    }
  }
  r.ok = r.bounds_ok && r.dini_ok;
  return r;
}

}  // namespace amz
