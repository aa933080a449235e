// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
// Runtime budgets are part of each criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "amz/amz.hpp"

using namespace amz;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Independent closed forms of the two branches.
double ref_f0(double x0, double y0, double x) {
  return x <= x0 ? y0 / x0 * x : y0 + (1.0 - y0) / (1.0 - x0) * (x - x0);
}
double ref_f1(double x0, double y0, double x) { return 1.0 - ref_f0(x0, y0, 1.0 - x); }

const SystemParams E1 = derive_slopes(0.75, 0.5);
const ProbField half = ProbField::constant(0.5);

ExperimentContext e1_context(unsigned threads = 1) { return {E1, half, 20240611, 4096, threads}; }

// Shared between the stationarity and symmetry criteria.
std::optional<StationaryOutcome> stationary_cache;
const StationaryOutcome& stationary_e1() {
  if (!stationary_cache) stationary_cache = run_stationary(e1_context(), StationaryConfig{});
  return *stationary_cache;
}

Outcome assumption_gate() {
  const AssumptionReport r = validate_assumptions(E1, half);
  const double target = 0.5 * std::log(4.0 / 3.0);
  const double err = std::fmax(std::abs(r.lambda0 - target), std::abs(r.lambda1 - target));
  const bool bad_a1 = !validate_assumptions(SystemParams::unchecked(0.75, 0.8), half).a1_ok;
  const bool bad_a4 = !validate_assumptions(E1, ProbField::constant(0.95)).a4_ok;
  return {r.all_ok() && err <= 1e-12 && bad_a1 && bad_a4,
          "Lambda error " + num(err) + ", (0.75,0.8) rejected " + std::to_string(bad_a1) + ", p0=0.95 rejected " +
              std::to_string(bad_a4)};
}

Outcome certificate() {
  const Certificate c = find_certificate(E1, half);
  const CertificateReport r = check_certificate(c, E1, half);
  const double s0 = r.find("contraction at 0 < p")->slack;
  const double s1 = r.find("contraction at 1 < p")->slack;
  const bool m_ok = c.m_const >= std::pow(E1.a0() * c.epsilon, -c.alpha);

  const GridPtr g = make_grid(4096, E1);
  const UlamOperator op(g, E1, half);
  Rng rng({2024, 0});
  int tested = 0, kept = 0;
  double worst = 0.0;
  while (tested < 100) {
    std::vector<double> mass(g->n_bins(), 0.0);
    const double w_uniform = rng.uniform();
    for (std::size_t k = 0; k < mass.size(); ++k) mass[k] = w_uniform * g->width(k);
    const int atoms = 1 + static_cast<int>(rng() % 4);
    for (int j = 0; j < atoms; ++j) mass[g->bin_of(0.05 + 0.9 * rng.uniform())] += (1.0 - w_uniform) / atoms;
    const GridMeasure mu(g, std::move(mass));
    if (!tail_class_member(mu, c.m_const, c.alpha).ok) continue;
    ++tested;
    const TailCheck after = tail_class_member(op.push(mu), c.m_const, c.alpha, 1e-9);
    worst = std::fmax(worst, after.worst_ratio);
    kept += after.ok;
  }
  return {r.ok && s0 >= 1e-6 && s1 >= 1e-6 && m_ok && kept == 100,
          "slack " + num(s0) + "/" + num(s1) + ", invariance " + std::to_string(kept) + "/100, worst ratio " +
              num(worst)};
}

Outcome fixed_point() {
  const double c = attractive_fixed_point(E1);
  Rng rng({31, 0});
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
  return {std::abs(c - 0.4) <= 1e-12 && worst_steps <= 200,
          "c = " + num(c) + ", oracle steps " + std::to_string(worst_steps)};
}

Outcome prop1() {
  const ExperimentReport r = exp_prop1(e1_context(), Prop1Config{});
  const double dev = r.metrics.at("exhaustive/max_deviation");
  const double viol = r.metrics.at("random/violations");
  return {r.passed && dev <= 0.10 && viol == 0.0,
          "exhaustive " + num(dev) + ", violations " + num(viol) + ", max ratio " + num(r.metrics.at("random/max_ratio"))};
}

Outcome escape() {
  const ExperimentReport r = exp_escape_bound(e1_context(), EscapeConfig{});
  return {r.passed && r.metrics.at("worst_slack") >= 0.0, "worst slack " + num(r.metrics.at("worst_slack"))};
}

Outcome stationarity() {
  const ExperimentReport& r = stationary_e1().report;
  const double ks = r.metrics.at("mutual_ks"), mc = r.metrics.at("mc_ks");
  const double tail = r.metrics.at("tail_worst_ratio");
  return {r.passed && ks < 2e-6 && mc < 0.01 && tail <= 1.0 + 1e-9,
          "mutual KS " + num(ks) + ", MC KS " + num(mc) + ", tail ratio " + num(tail)};
}

Outcome symmetry() {
  const ExperimentReport& r = stationary_e1().report;
  const double ulam = r.metrics.at("mean_ulam"), mc = r.metrics.at("mean_mc");
  return {std::abs(ulam - 0.5) <= 2e-3 && std::abs(mc - 0.5) <= 2e-3,
          "Ulam mean " + num(ulam) + ", Birkhoff mean " + num(mc)};
}

Outcome stability() {
  const ExperimentReport r = exp_stability(e1_context(), StabilityConfig{});
  const double ks = r.metrics.at("final_ks"), rise = r.metrics.at("max_rise_after_peak");
  return {r.passed && ks < 0.01 && rise <= 1e-9, "KS at 200 " + num(ks) + ", rise after peak " + num(rise)};
}

Outcome slln() {
  SllnConfig cfg;
  cfg.functions = {"x"};
  const ExperimentReport r = exp_slln(e1_context(), cfg, &*stationary_e1().mu_star);
  const double worst = r.metrics.at("worst_difference");
  return {r.passed && worst < 0.005 && cfg.seeds >= 2, "worst difference " + num(worst)};
}

Outcome prop2() {
  const ExperimentReport r = exp_prop2_decay(e1_context(), Prop2Config{});
  const double up = r.metrics.at("slope_upper"), ratio = r.metrics.at("ratio");
  const double qup = r.metrics.at("quantile/slope_upper");
  return {r.passed && up < 0.0 && ratio < 0.01 && qup < 0.0,
          "slope upper " + num(up) + ", D100/D0 " + num(ratio) + ", quantile slope upper " + num(qup)};
}

Outcome reproducibility() {
  // Every experiment twice, single-threaded and on four threads.
  const ExperimentContext one = e1_context(1), four = e1_context(4);
  std::vector<std::string> differing;
  auto same = [&](const std::string& name, auto&& fn) {
    if (!(fn(one) == fn(one) && fn(one) == fn(four))) differing.push_back(name);
  };
  EscapeConfig esc;
  esc.samples = 20000;
  same("escape", [&](const auto& c) { return exp_escape_bound(c, esc); });
  Prop1Config p1;
  p1.pairs = 2000;
  same("prop1", [&](const auto& c) { return exp_prop1(c, p1); });
  Prop2Config p2;
  p2.pairs = 2000;
  same("prop2", [&](const auto& c) { return exp_prop2_decay(c, p2); });
  ReachConfig reach;
  reach.runs = 2000;
  same("reach", [&](const auto& c) { return exp_reach_c(c, reach); });
  StationaryConfig st;
  st.mc_steps = 100000;
  same("stationary", [&](const auto& c) { return exp_stationary(c, st); });
  same("stability", [&](const auto& c) { return exp_stability(c, StabilityConfig{}); });
  SllnConfig sl;
  sl.steps = 100000;
  same("slln", [&](const auto& c) { return exp_slln(c, sl, &*stationary_e1().mu_star); });
  same("equicontinuity", [&](const auto& c) { return exp_equicontinuity(c, EquicontinuityConfig{}); });

  // The full pipeline at default budgets, twice, compared byte for byte.
  const RunConfig cfg = parse_config(read_text_file(std::string(AMZ_CONFIG_DIR) + "/e1.toml"));
  const fs::path base = fs::temp_directory_path() / "amz_acceptance";
  fs::remove_all(base);
  std::ostringstream log;
  const auto t0 = std::chrono::steady_clock::now();
  const int code = run_command(cfg, "all", (base / "a").string(), log);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const int code2 = run_command(cfg, "all", (base / "b").string(), log);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(base / "a")) {
    ++files;
    const fs::path other = base / "b" / e.path().filename();
    if (!fs::exists(other) || read_text_file(e.path().string()) != read_text_file(other.string()))
      differing.push_back("all:" + e.path().filename().string());
  }
  fs::remove_all(base);

  std::string d = "all exit " + std::to_string(code) + " in " + num(secs) + " s, " + std::to_string(files) +
                  " files identical";
  for (const auto& n : differing) d += ", differs: " + n;
  return {differing.empty() && code == 0 && code2 == 0 && secs < 600.0, d};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;  // 0: no runtime bound
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "assumption gate", 1.0, assumption_gate},
      {2, "certificate and class invariance", 30.0, certificate},
      {3, "attractive fixed point", 0.0, fixed_point},
      {4, "coupling bound", 60.0, prop1},
      {5, "endpoint escape bound", 300.0, escape},
      {6, "stationarity and uniqueness", 300.0, stationarity},
      {7, "symmetry of the stationary mean", 0.0, symmetry},
      {8, "asymptotic stability", 120.0, stability},
      {9, "strong law of large numbers", 120.0, slln},
      {10, "geometric decay of coupled distance", 180.0, prop2},
      {11, "reproducibility and full run", 0.0, reproducibility},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool ok = o.ok;
    if (c.budget_s > 0.0 && secs >= c.budget_s) {
      ok = false;
      o.detail += ", over budget " + num(c.budget_s) + " s";
    }
    failures += !ok;
    std::cout << (ok ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name << ": " << o.detail << " (" << num(secs)
              << " s)" << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << "\n";
  return failures == 0 ? 0 : 1;
}
