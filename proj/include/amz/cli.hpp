#pragma once

// Command dispatch for the amz tool: every command reads one RunConfig and
// writes JSON reports, CSV series and SVG plots into an output directory.
//
// Exit codes: 0 all requested checks passed, 1 an experiment failed,
// 2 the configuration was rejected.

#include <cstdlib>
#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "amz/certificate.hpp"
#include "amz/config.hpp"
#include "amz/experiments.hpp"
#include "amz/plot.hpp"
#include "amz/report.hpp"

namespace amz {

inline constexpr int kExitPass = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitConfig = 2;

inline const std::vector<std::string>& known_commands() {
  static const std::vector<std::string> cmds{"validate", "certificate", "stationary", "stability",
                                             "slln",     "prop1",       "prop2",      "escape",
                                             "reach",    "equicontinuity", "all"};
  return cmds;
}

inline constexpr const char* kOutDirEnv = "AMZ_OUT_DIR";

/// --out, then the config's output_dir, then $AMZ_OUT_DIR, then "amz_out".
inline std::string resolve_output_dir(const std::string& cli_out, const RunConfig& cfg) {
  if (!cli_out.empty()) return cli_out;
  if (!cfg.output_dir.empty()) return cfg.output_dir;
  if (const char* env = std::getenv(kOutDirEnv); env != nullptr && *env != '\0') return env;
  return "amz_out";
}

inline json certificate_to_json(const Certificate& c, const CertificateReport& check, const RunConfig& cfg) {
  json j;
  j["epsilon"] = c.epsilon;
  j["alpha"] = c.alpha;
  j["p"] = c.p;
  j["m_const"] = c.m_const;
  j["eta1"] = c.eta1;
  j["c"] = c.c;
  j["lambda0"] = c.lambda0;
  j["lambda1"] = c.lambda1;
  j["checks_ok"] = check.ok;
  j["seed"] = cfg.seed;
  j["config_echo"] = config_to_json(cfg).dump();
  return j;
}

namespace detail {

inline void write_json(const std::filesystem::path& path, const json& j) {
  write_text_file(path.string(), j.dump(2) + "\n");
}

inline std::optional<PlotSpec> plot_for(const Series& s) {
  if (s.name == "prop2_decay") return PlotSpec{"n", {"D_n", "quantile"}, "Coupled distance decay", "n", "", true};
  if (s.name == "stability") return PlotSpec{"n", {"ks", "w1"}, "Distance between P^n nu1 and P^n nu2", "n", "", true};
  if (s.name == "equicontinuity") return PlotSpec{"n", {}, "Modulus of U^n phi near c", "n", "", true};
  if (s.name == "stationary_measure") return PlotSpec{"bin_lo", {"mass"}, "Stationary measure (bin masses)", "x", "mass", false};
  if (s.name == "equicontinuity_function") return PlotSpec{"x", {"value"}, "U^n phi at the horizon", "x", "", false};
  return std::nullopt;
}

inline void write_report(const std::filesystem::path& dir, const ExperimentReport& r, const RunConfig& cfg) {
  detail::write_json(dir / (r.name + ".json"), report_to_json(r));
  for (const Series& s : r.series) {
    const auto csv = dir / (s.name + ".csv");
    write_text_file(csv.string(), series_to_csv(s, r.config_echo, r.seed));
    if (auto spec = plot_for(s)) emit_plot(csv.string(), *spec, (dir / (s.name + ".svg")).string());
  }
  if (r.name == "escape") {
    // Ensemble summaries, one object per (side, x, n).
    json arr = json::array();
    for (const Series& s : r.series) {
      if (s.name != "escape") continue;
      for (const auto& row : s.rows)
        arr.push_back({{"side", cfg.escape.sides.at(static_cast<std::size_t>(row[0]))},
                       {"x", row[1]},
                       {"n", static_cast<std::uint64_t>(row[2])},
                       {"estimate", row[3]},
                       {"stderr", row[4]},
                       {"samples", cfg.escape.samples},
                       {"seed", r.seed}});
    }
    detail::write_json(dir / "escape_estimates.json", json{{"seed", r.seed}, {"config_echo", r.config_echo}, {"estimates", arr}});
  }
}

}  // namespace detail

/// Runs one command; log receives one human-readable line per step.
inline int run_command(const RunConfig& cfg, const std::string& command, const std::string& out_dir,
                       std::ostream& log) {
  if (std::find(known_commands().begin(), known_commands().end(), command) == known_commands().end()) {
    log << "unknown command '" << command << "'\n";
    return kExitConfig;
  }
  ValidationResult v;
  try {
    v = validate_config(cfg);
  } catch (const Error& e) {
    log << e.what() << "\n";
    return kExitConfig;
  }
  const std::filesystem::path dir(out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    log << "io-error: cannot create '" << out_dir << "': " << ec.message() << "\n";
    return kExitConfig;
  }

  const ExperimentContext ctx = cfg.context();
  json summary;
  summary["command"] = command;
  summary["seed"] = cfg.seed;
  summary["config_echo"] = config_to_json(cfg);
  json results = json::object();
  bool all_ok = true;

  auto record = [&](const std::string& name, bool ok) {
    results[name] = ok;
    all_ok = all_ok && ok;
    log << (ok ? "PASS " : "FAIL ") << name << "\n";
  };
  const bool all = command == "all";

  try {
    if (command == "validate" || all) {
      json j;
      j["a1_ok"] = v.assumptions.a1_ok;
      j["a2_ok"] = v.assumptions.a2_ok;
      j["a3_ok"] = v.assumptions.a3_ok;
      j["a4_ok"] = v.assumptions.a4_ok;
      j["lambda0"] = v.assumptions.lambda0;
      j["lambda1"] = v.assumptions.lambda1;
      j["detail"] = std::vector<std::string>(std::begin(v.assumptions.detail), std::end(v.assumptions.detail));
      j["probability_floor"] = v.field.floor;
      j["exact_lipschitz"] = v.field.exact_lipschitz;
      j["seed"] = cfg.seed;
      j["config_echo"] = config_to_json(cfg);
      detail::write_json(dir / "validate.json", j);
      record("validate", v.assumptions.all_ok());
    }
    if (command == "certificate" || all) {
      bool ok = false;
      try {
        const Certificate cert = find_certificate(ctx.system, ctx.field);
        const CertificateReport check = check_certificate(cert, ctx.system, ctx.field);
        detail::write_json(dir / "certificate.json", certificate_to_json(cert, check, cfg));
        ok = check.ok;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::no_certificate) throw;
        log << e.what() << "\n";
        detail::write_json(dir / "certificate.json",
                           json{{"error", e.what()}, {"seed", cfg.seed}, {"config_echo", config_to_json(cfg).dump()}});
      }
      record("certificate", ok);
    }
    auto run = [&](const std::string& name, auto&& fn) {
      if (command != name && !all) return;
      const ExperimentReport r = fn();
      detail::write_report(dir, r, cfg);
      record(name, r.passed);
    };
    std::optional<GridMeasure> mu_star;
    run("stationary", [&] {
      StationaryOutcome out = run_stationary(ctx, cfg.stationary);
      mu_star = std::move(out.mu_star);
      return out.report;
    });
    run("stability", [&] { return exp_stability(ctx, cfg.stability); });
    run("slln", [&] {
      // Reuse the stationary fixed point only when it was computed to the same tolerance.
      const bool reuse = mu_star && cfg.stationary.tol == cfg.slln.stationary_tol && !cfg.stationary.cesaro;
      return exp_slln(ctx, cfg.slln, reuse ? &*mu_star : nullptr);
    });
    run("prop1", [&] { return exp_prop1(ctx, cfg.prop1); });
    run("prop2", [&] { return exp_prop2_decay(ctx, cfg.prop2); });
    run("escape", [&] { return exp_escape_bound(ctx, cfg.escape); });
    run("reach", [&] { return exp_reach_c(ctx, cfg.reach); });
    run("equicontinuity", [&] { return exp_equicontinuity(ctx, cfg.equicontinuity); });
  } catch (const Error& e) {
    log << e.what() << "\n";
    const bool config_error = e.kind() == ErrorKind::parse || e.kind() == ErrorKind::validation ||
                              e.kind() == ErrorKind::parameter || e.kind() == ErrorKind::io;
    return config_error ? kExitConfig : kExitFail;
  }

  summary["results"] = results;
  summary["passed"] = all_ok;
  detail::write_json(dir / "summary.json", summary);
  return all_ok ? kExitPass : kExitFail;
}

}  // namespace amz
