#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>

#include "catch_amalgamated.hpp"

#include "amz/ifs_core.hpp"
#include "amz/rng.hpp"

using namespace amz;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Reference maps written directly from the slope form.
double ref_f0(double x0, double y0, double x) {
  const double a0 = y0 / x0, a1 = (1 - y0) / (1 - x0);
  return x <= x0 ? a0 * x : a1 * (x - 1) + 1;
}
double ref_f1(double x0, double y0, double x) { return 1 - ref_f0(x0, y0, 1 - x); }

std::int64_t ulp_distance(double a, double b) {
  return std::abs(std::bit_cast<std::int64_t>(a) - std::bit_cast<std::int64_t>(b));
}

const SystemParams E1 = derive_slopes(0.75, 0.5);

}  // namespace

TEST_CASE("slopes follow from the breakpoint") {
  CHECK_THAT(E1.a0(), WithinAbs(2.0 / 3.0, 1e-15));
  CHECK_THAT(E1.a1(), WithinAbs(2.0, 1e-15));
  const SystemParams s = derive_slopes(0.6, 0.5);
  CHECK_THAT(s.a0(), WithinAbs(5.0 / 6.0, 1e-15));
  CHECK_THAT(s.a1(), WithinAbs(1.25, 1e-15));
}

TEST_CASE("breakpoints outside the admissible region are rejected") {
  auto kind_of = [](double x0, double y0) {
    try {
      derive_slopes(x0, y0);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::io;  // sentinel: no error
  };
  CHECK(kind_of(0.5, 0.4) == ErrorKind::reject_out_of_region);
  CHECK(kind_of(0.75, 0.8) == ErrorKind::reject_out_of_region);
  CHECK(kind_of(0.75, 0.49) == ErrorKind::reject_out_of_region);
  CHECK(kind_of(0.75, 0.75) == ErrorKind::reject_out_of_region);
  CHECK(kind_of(1.0, 0.5) == ErrorKind::reject_out_of_region);
  CHECK_THROWS_WITH(derive_slopes(0.5, 0.4), Catch::Matchers::ContainsSubstring("x0"));
  CHECK_NOTHROW(derive_slopes(0.75, 0.5));
  CHECK_NOTHROW(derive_slopes(0.6, 0.5));  // y0 = 1/2 is allowed
}

TEST_CASE("map values at known points") {
  CHECK(apply_map(E1, Branch::f0, 0.75) == 0.5);
  CHECK_THAT(apply_map(E1, Branch::f0, 0.9), WithinAbs(0.8, 1e-15));
  CHECK_THAT(apply_map(E1, Branch::f1, 0.25), WithinAbs(0.5, 1e-15));
  CHECK_THAT(apply_map(E1, Branch::f0, 0.3), WithinAbs(0.2, 1e-15));
  CHECK_THAT(apply_map(E1, Branch::f1, 0.3), WithinAbs(8.0 / 15.0, 1e-15));
}

TEST_CASE("inverse values at known points") {
  CHECK_THAT(invert_map(E1, Branch::f0, 0.2), WithinAbs(0.3, 1e-15));
  CHECK_THAT(invert_map(E1, Branch::f1, 0.5), WithinAbs(0.25, 1e-15));
  CHECK(invert_map(E1, Branch::f0, E1.y0()) == E1.x0());
}

TEST_CASE("maps and inverses reject points outside (0,1)") {
  for (double x : {0.0, 1.0, -0.1, 1.5, std::nan("")}) {
    CHECK_THROWS_AS(apply_map(E1, Branch::f0, x), Error);
    CHECK_THROWS_AS(invert_map(E1, Branch::f1, x), Error);
  }
}

TEST_CASE("maps agree with the reference form, are increasing and round-trip") {
  Rng rng({11, 0});
  std::int64_t worst_apply_invert = 0, worst_invert_apply = 0, worst_symmetry = 0;
  double worst_ref = 0.0;
  for (int k = 0; k < 100000; ++k) {
    double x = rng.uniform();
    if (x == 0.0) continue;
    for (Branch b : {Branch::f0, Branch::f1}) {
      const double y = apply_map(E1, b, x);
      REQUIRE(y > 0.0);
      REQUIRE(y < 1.0);
      const double ref = b == Branch::f0 ? ref_f0(0.75, 0.5, x) : ref_f1(0.75, 0.5, x);
      worst_ref = std::fmax(worst_ref, std::abs(y - ref));
      worst_invert_apply = std::max(worst_invert_apply, ulp_distance(invert_map(E1, b, y), x));
      worst_apply_invert = std::max(worst_apply_invert, ulp_distance(apply_map(E1, b, invert_map(E1, b, x)), x));
    }
    const double lhs = apply_map(E1, Branch::f1, x);
    const double rhs = 1.0 - apply_map(E1, Branch::f0, 1.0 - x);
    worst_symmetry = std::max(worst_symmetry, ulp_distance(lhs, rhs));
  }
  CHECK(worst_ref <= 4e-16);
  CHECK(worst_apply_invert <= 2);
  CHECK(worst_invert_apply <= 2);
  CHECK(worst_symmetry <= 1);
}

TEST_CASE("f0 lies below and f1 above the diagonal; both strictly increasing") {
  for (const SystemParams& s : {E1, derive_slopes(0.6, 0.5), derive_slopes(0.9, 0.55)}) {
    double prev0 = 0.0, prev1 = 0.0;
    for (int k = 1; k < 10000; ++k) {
      const double x = k / 10000.0;
      const double y0 = apply_map(s, Branch::f0, x), y1 = apply_map(s, Branch::f1, x);
      CHECK(y0 < x);
      CHECK(y1 > x);
      CHECK(y0 > prev0);
      CHECK(y1 > prev1);
      prev0 = y0;
      prev1 = y1;
    }
  }
}

TEST_CASE("the kink is continuous") {
  for (const SystemParams& s : {E1, derive_slopes(0.6, 0.5), derive_slopes(0.8, 0.7)}) {
    CHECK(apply_map(s, Branch::f0, s.x0()) == s.y0());
    const double above = std::nextafter(s.x0(), 1.0);
    CHECK_THAT(apply_map(s, Branch::f0, above), WithinAbs(s.y0(), 1e-15));
  }
}

TEST_CASE("clamping keeps images inside (0,1) and is counted") {
  diagnostics::reset_clamp_count();
  CHECK(detail::clamp_open(0.0) == std::numeric_limits<double>::denorm_min());
  CHECK(detail::clamp_open(1.0) == std::nextafter(1.0, 0.0));
  CHECK(detail::clamp_open(0.5) == 0.5);
  CHECK(diagnostics::clamp_count() == 2);
  CHECK(apply_map(E1, Branch::f0, std::numeric_limits<double>::denorm_min()) > 0.0);
  CHECK(apply_map(E1, Branch::f1, std::nextafter(1.0, 0.0)) < 1.0);

  // A typical orbit never needs clamping.
  diagnostics::reset_clamp_count();
  Rng rng({3, 3});
  double x = 0.5;
  for (int k = 0; k < 1000000; ++k) x = apply_map(E1, rng.uniform() < 0.5 ? Branch::f0 : Branch::f1, x);
  CHECK(diagnostics::clamp_count() == 0);
}

TEST_CASE("average Lyapunov exponents") {
  const auto le = lyapunov_exponents(E1, ProbField::constant(0.5));
  CHECK_THAT(le.lambda0, WithinAbs(0.5 * std::log(4.0 / 3.0), 1e-15));
  CHECK_THAT(le.lambda1, WithinAbs(0.5 * std::log(4.0 / 3.0), 1e-15));
  CHECK_THAT(le.lambda0, WithinAbs(0.143841, 1e-6));

  const auto all0 = lyapunov_exponents(E1, ProbField::constant(1.0));
  CHECK_THAT(all0.lambda0, WithinAbs(std::log(2.0 / 3.0), 1e-15));
  CHECK(all0.lambda0 < 0.0);

  // a0 a1 = 1 with equal weights at 0 gives zero.
  const SystemParams recip = SystemParams::unchecked(2.0 / 3.0, 1.0 / 3.0);  // a0 = 1/2, a1 = 2
  CHECK_THAT(recip.a0() * recip.a1(), WithinAbs(1.0, 1e-15));
  CHECK_THAT(lyapunov_exponents(recip, ProbField::constant(0.5)).lambda0, WithinAbs(0.0, 1e-15));
}

TEST_CASE("more weight on the expanding branch at 0 raises lambda0") {
  double prev = -INFINITY;
  for (int k = 0; k <= 20; ++k) {
    const double p1 = k / 20.0;  // probability of f1, the branch expanding at 0
    const double l0 = lyapunov_exponents(E1, ProbField::constant(1.0 - p1)).lambda0;
    CHECK(l0 > prev);
    prev = l0;
  }
}

TEST_CASE("attractive fixed point of f0 after f1") {
  CHECK_THAT(attractive_fixed_point(E1), WithinAbs(0.4, 1e-12));
  const SystemParams s = derive_slopes(0.6, 0.5);
  CHECK_THAT(attractive_fixed_point(s), WithinAbs(0.5 / 1.1, 1e-12));
  for (const SystemParams& p : {E1, s, derive_slopes(0.9, 0.6)}) {
    const double c = attractive_fixed_point(p);
    CHECK(c > 1.0 - p.x0());
    CHECK(c < p.y0());
    CHECK(std::abs(apply_map(p, Branch::f0, apply_map(p, Branch::f1, c)) - c) <= 1e-12);
  }
}

TEST_CASE("iteration oracle converges to c from random starts") {
  Rng rng({17, 1});
  const double c = attractive_fixed_point(E1);
  int worst_steps = 0;
  for (int k = 0; k < 1000; ++k) {
    double x = 0.25 + 0.25 * rng.uniform();
    int steps = 0;
    while (std::abs(x - c) > 1e-12 && steps < 1000) {
      x = ref_f0(0.75, 0.5, ref_f1(0.75, 0.5, x));
      ++steps;
    }
    worst_steps = std::max(worst_steps, steps);
  }
  CHECK(worst_steps <= 200);
}

TEST_CASE("a fixed point outside the attracting interval is a consistency error") {
  // y0 < 1 - x0 violates (A1); the closed form falls outside (1 - x0, y0).
  const SystemParams bad = SystemParams::unchecked(0.55, 0.3);
  CHECK_THROWS_AS(attractive_fixed_point(bad), Error);
}

TEST_CASE("coupling radius") {
  const Eta1Bounds b = eta1_bounds(E1);
  CHECK_THAT(b.slope_condition, WithinAbs(1.0 / 6.0, 1e-15));
  CHECK_THAT(b.image_condition, WithinAbs(0.0625, 1e-15));
  CHECK_THAT(b.gap_condition, WithinAbs(0.25, 1e-15));
  const double eta = admissible_eta1(E1);
  CHECK_THAT(eta, WithinAbs(0.061875, 1e-15));

  for (const SystemParams& s : {E1, derive_slopes(0.6, 0.5), derive_slopes(0.9, 0.7), derive_slopes(0.55, 0.52)}) {
    const double e = admissible_eta1(s);
    CHECK(e > 0.0);
    const double a0 = s.a0(), a1 = s.a1();
    // Slope condition on a dense grid of y in [1 - y0, 1].
    for (int k = 0; k <= 10000; ++k) {
      const double y = (1 - s.y0()) + s.y0() * k / 10000.0;
      CHECK(a0 * y - a1 * (y - a1 * e) < 0.0);
    }
    CHECK(ref_f1(s.x0(), s.y0(), s.y0() + a1 * e) < s.x0());
    CHECK(e < s.x0() - s.y0());
  }
}

TEST_CASE("assumption report") {
  const AssumptionReport ok = validate_assumptions(E1, ProbField::constant(0.5));
  CHECK(ok.all_ok());
  CHECK_THAT(ok.lambda0, WithinAbs(0.5 * std::log(4.0 / 3.0), 1e-12));

  const AssumptionReport a4 = validate_assumptions(E1, ProbField::constant(0.95));
  CHECK(a4.a1_ok);
  CHECK(a4.a3_ok);
  CHECK_FALSE(a4.a4_ok);
  CHECK(a4.lambda0 < 0.0);
  CHECK_THAT(a4.lambda0, WithinAbs(0.95 * std::log(2.0 / 3.0) + 0.05 * std::log(2.0), 1e-15));

  const AssumptionReport a3 = validate_assumptions(E1, ProbField::constant(0.0));
  CHECK_FALSE(a3.a3_ok);

  const AssumptionReport a1 = validate_assumptions(SystemParams::unchecked(0.75, 0.8), ProbField::constant(0.5));
  CHECK_FALSE(a1.a1_ok);
  CHECK(a1.detail[0] != "ok");
}
