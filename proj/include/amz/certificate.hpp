#pragma once

// Constructive constants of the existence argument.
//
// With S_i^L = sup_{t <= eps} p_i(t) and S_i^R = sup_{t <= eps} p_i(1 - t), the
// certificate asks for one (alpha, p) with
//
//   g_L(alpha) = S_0^L a0^-alpha + S_1^L a1^-alpha < p
//   g_R(alpha) = S_0^R a1^-alpha + S_1^R a0^-alpha < p
//
// and M >= (a0 eps)^-alpha. Under these, the class of probability measures
// with mu((0,x)) <= M x^alpha and mu((1-x,1)) <= M x^alpha is P-invariant.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "amz/error.hpp"
#include "amz/ifs_core.hpp"
#include "amz/measures.hpp"
#include "amz/prob_field.hpp"

namespace amz {

struct Certificate {
  double epsilon = 0.0;
  double alpha = 0.0;
  double p = 0.0;
  double m_const = 0.0;
  double eta1 = 0.0;
  double c = 0.0;
  double lambda0 = 0.0;
  double lambda1 = 0.0;

  bool operator==(const Certificate&) const = default;
};

/// Probability suprema near the two endpoints for a given epsilon.
struct EndpointSups {
  double p0_left = 0.0;
  double p1_left = 0.0;
  double p0_right = 0.0;
  double p1_right = 0.0;
};

inline EndpointSups endpoint_sups(const ProbField& field, double epsilon) {
  return {interval_sup(field, Branch::f0, 0.0, epsilon),
          interval_sup(field, Branch::f1, 0.0, epsilon),
          interval_sup(field, Branch::f0, 1.0 - epsilon, 1.0),
          interval_sup(field, Branch::f1, 1.0 - epsilon, 1.0)};
}

inline double contraction_left(const SystemParams& s, const EndpointSups& sup, double alpha) {
  return sup.p0_left * std::pow(s.a0(), -alpha) + sup.p1_left * std::pow(s.a1(), -alpha);
}

inline double contraction_right(const SystemParams& s, const EndpointSups& sup, double alpha) {
  return sup.p0_right * std::pow(s.a1(), -alpha) + sup.p1_right * std::pow(s.a0(), -alpha);
}

inline constexpr double kStrictMargin = 1e-12;

struct CertificateSearch {
  std::size_t epsilon_points = 64;
  double epsilon_start_fraction = 0.99;  // first epsilon = fraction * (1 - x0)
  double epsilon_floor_fraction = 1e-6;  // last epsilon = floor * first
  double alpha_tolerance = 1e-10;
};

class NoCertificateError : public Error {
 public:
  explicit NoCertificateError(double best_g)
      : Error(ErrorKind::no_certificate,
              "epsilon grid exhausted; best max(g_L, g_R) = " + std::to_string(best_g)),
        best_g_(best_g) {}
  double best_g() const { return best_g_; }

 private:
  double best_g_;
};

namespace detail {

/// Golden-section minimization of a unimodal function on [lo, hi].
template <class F>
double golden_section_min(F&& f, double lo, double hi, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace detail

inline Certificate find_certificate(const SystemParams& s, const ProbField& field,
                                    const CertificateSearch& search = {}) {
  const double first = search.epsilon_start_fraction * (1.0 - s.x0());
  const double ratio =
      std::pow(search.epsilon_floor_fraction, 1.0 / static_cast<double>(search.epsilon_points - 1));
  double best_g = std::numeric_limits<double>::infinity();

  for (std::size_t k = 0; k < search.epsilon_points; ++k) {
    const double eps = first * std::pow(ratio, static_cast<double>(k));
    const EndpointSups sup = endpoint_sups(field, eps);
    auto g = [&](double a) {
      return std::max(contraction_left(s, sup, a), contraction_right(s, sup, a));
    };
    double alpha = detail::golden_section_min(g, 0.0, 1.0, search.alpha_tolerance);
    alpha = std::clamp(alpha, std::nextafter(0.0, 1.0), std::nextafter(1.0, 0.0));
    const double gmax = g(alpha);
    best_g = std::min(best_g, gmax);
    if (!(gmax < 1.0 - 4.0 * kStrictMargin)) continue;

    Certificate cert;
    cert.epsilon = eps;
    cert.alpha = alpha;
    cert.p = 0.5 * (gmax + 1.0);
    cert.m_const = std::pow(s.a0() * eps, -alpha);
    cert.eta1 = admissible_eta1(s);
    cert.c = attractive_fixed_point(s);
    const LyapunovExponents le = lyapunov_exponents(s, field);
    cert.lambda0 = le.lambda0;
    cert.lambda1 = le.lambda1;
    return cert;
  }
  throw NoCertificateError(best_g);
}

struct InequalityCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // rhs - lhs for "lhs < rhs" style checks
  bool ok = false;
};

struct CertificateReport {
  bool ok = false;
  std::vector<InequalityCheck> checks;

  const InequalityCheck* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

/// Re-verifies every certificate invariant with exact interval suprema.
inline CertificateReport check_certificate(const Certificate& cert, const SystemParams& s,
                                           const ProbField& field) {
  CertificateReport r;
  auto strict = [&](std::string name, double lhs, double rhs) {
    r.checks.push_back({std::move(name), lhs, rhs, rhs - lhs, rhs - lhs >= kStrictMargin});
  };
  auto weak = [&](std::string name, double lhs, double rhs) {
    r.checks.push_back({std::move(name), lhs, rhs, rhs - lhs, rhs - lhs >= 0.0});
  };

  strict("epsilon > 0", 0.0, cert.epsilon);
  strict("epsilon < 1 - x0", cert.epsilon, 1.0 - s.x0());
  strict("alpha > 0", 0.0, cert.alpha);
  strict("alpha < 1", cert.alpha, 1.0);
  strict("p < 1", cert.p, 1.0);

  if (cert.epsilon > 0.0 && cert.epsilon <= 1.0) {
    const EndpointSups sup = endpoint_sups(field, cert.epsilon);
    strict("contraction at 0 < p", contraction_left(s, sup, cert.alpha), cert.p);
    strict("contraction at 1 < p", contraction_right(s, sup, cert.alpha), cert.p);
    weak("M >= (a0 eps)^-alpha", std::pow(s.a0() * cert.epsilon, -cert.alpha), cert.m_const);
  } else {
    r.checks.push_back({"contraction at 0 < p", 0.0, 0.0, 0.0, false});
    r.checks.push_back({"contraction at 1 < p", 0.0, 0.0, 0.0, false});
    r.checks.push_back({"M >= (a0 eps)^-alpha", 0.0, 0.0, 0.0, false});
  }
  weak("M >= 1", 1.0, cert.m_const);
  r.checks.push_back({"eta1 admissible", 0.0, cert.eta1, cert.eta1, eta1_admissible(s, cert.eta1)});
  strict("c > 1 - x0", 1.0 - s.x0(), cert.c);
  strict("c < y0", cert.c, s.y0());

  r.ok = std::all_of(r.checks.begin(), r.checks.end(), [](const auto& c) { return c.ok; });
  return r;
}

struct TailCheck {
  bool ok = true;
  double worst_ratio = 0.0;  // max over x of tail(x) / (M x^alpha)
  double worst_x = 0.0;
};

namespace detail {

inline void tail_update(TailCheck& t, double tail, double x, double m_const, double alpha) {
  const double ratio = tail / (m_const * std::pow(x, alpha));
  if (ratio > t.worst_ratio) {
    t.worst_ratio = ratio;
    t.worst_x = x;
  }
}

}  // namespace detail

/// Membership in the tail class, checked at every interior bin edge.
inline TailCheck tail_class_member(const GridMeasure& mu, double m_const, double alpha,
                                   double tolerance = 0.0) {
  TailCheck t;
  const auto cdf = mu.cdf_at_edges();
  const double total = cdf.back();
  const auto edges = mu.grid().edges();
  for (std::size_t k = 1; k + 1 < edges.size(); ++k) {
    detail::tail_update(t, cdf[k], edges[k], m_const, alpha);               // mu((0, e))
    detail::tail_update(t, total - cdf[k], 1.0 - edges[k], m_const, alpha);  // mu((e, 1))
  }
  t.ok = t.worst_ratio <= 1.0 + tolerance;
  return t;
}

/// Empirical version: the ratio is maximal just to the right of each sample
/// (left tail) or just to the left of it (right tail), so checking at the
/// samples gives the exact supremum.
inline TailCheck tail_class_member(const EmpiricalMeasure& mu, double m_const, double alpha,
                                   double tolerance = 0.0) {
  TailCheck t;
  const auto s = mu.samples();
  const double n = static_cast<double>(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (k + 1 == s.size() || s[k + 1] != s[k])
      detail::tail_update(t, static_cast<double>(k + 1) / n, s[k], m_const, alpha);
    if (k == 0 || s[k - 1] != s[k])
      detail::tail_update(t, static_cast<double>(s.size() - k) / n, 1.0 - s[k], m_const, alpha);
  }
  t.ok = t.worst_ratio <= 1.0 + tolerance;
  return t;
}

}  // namespace amz
