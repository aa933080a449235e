#pragma once

// Experiment reports and their JSON/CSV forms.

#include <charconv>
#include <cstdint>
#include <cstring>
#include <map>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "json.hpp"

#include "amz/error.hpp"
#include "amz/ifs_core.hpp"
#include "amz/prob_field.hpp"

namespace amz {

using json = nlohmann::ordered_json;

/// A table of numeric columns, written as a CSV side file.
struct Series {
  std::string name;  // file stem
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  bool log_y = false;
};

struct ExperimentReport {
  std::string name;
  bool passed = false;
  std::map<std::string, double> metrics;
  json config_echo;
  std::uint64_t seed = 0;
  std::vector<Series> series;
  std::vector<std::string> notes;

  bool operator==(const ExperimentReport& o) const {
    // Metrics compare bitwise, so NaN == NaN here.
    if (name != o.name || passed != o.passed || seed != o.seed || config_echo != o.config_echo ||
        notes != o.notes || metrics.size() != o.metrics.size())
      return false;
    for (auto a = metrics.begin(), b = o.metrics.begin(); a != metrics.end(); ++a, ++b)
      if (a->first != b->first || std::memcmp(&a->second, &b->second, sizeof(double)) != 0) return false;
    if (series.size() != o.series.size()) return false;
    for (std::size_t k = 0; k < series.size(); ++k) {
      const Series& s = series[k];
      const Series& t = o.series[k];
      if (s.name != t.name || s.columns != t.columns || s.log_y != t.log_y || s.rows.size() != t.rows.size())
        return false;
      for (std::size_t r = 0; r < s.rows.size(); ++r)
        if (s.rows[r].size() != t.rows[r].size() ||
            std::memcmp(s.rows[r].data(), t.rows[r].data(), s.rows[r].size() * sizeof(double)) != 0)
          return false;
    }
    return true;
  }
};

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline json field_to_json(const ProbField& field) {
  json j;
  j["family"] = std::string(field.family_name());
  std::visit(
      [&](const auto& f) {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, ConstantFamily>) {
          j["p"] = f.p;
        } else if constexpr (std::is_same_v<F, AffineFamily>) {
          j["v0"] = f.v0;
          j["v1"] = f.v1;
        } else if constexpr (std::is_same_v<F, PiecewiseLinearFamily>) {
          json pts = json::array();
          for (const auto& [x, p] : f.points) pts.push_back(json::array({x, p}));
          j["points"] = pts;
        } else {
          j["center"] = f.center;
          j["steepness"] = f.steepness;
          j["low"] = f.low;
          j["high"] = f.high;
        }
      },
      field.family());
  if (auto d = field.declared_delta()) j["delta"] = *d;
  if (auto l = field.declared_lipschitz()) j["lipschitz"] = *l;
  return j;
}

inline json system_to_json(const SystemParams& s) { return json{{"x0", s.x0()}, {"y0", s.y0()}}; }

inline json report_to_json(const ExperimentReport& r) {
  json j;
  j["name"] = r.name;
  j["passed"] = r.passed;
  j["seed"] = r.seed;
  json m = json::object();
  for (const auto& [k, v] : r.metrics) m[k] = v;  // non-finite values become null
  j["metrics"] = m;
  json files = json::array();
  for (const auto& s : r.series) files.push_back(s.name + ".csv");
  j["series"] = files;
  j["notes"] = r.notes;
  j["config_echo"] = r.config_echo;
  return j;
}

/// CSV text with '#' header lines carrying the seed and the config echo.
inline std::string series_to_csv(const Series& s, const json& echo, std::uint64_t seed) {
  if (s.columns.empty()) throw Error(ErrorKind::malformed_series, "series '" + s.name + "' has no columns");
  std::string out = "# seed: " + std::to_string(seed) + "\n";
  out += "# config: " + echo.dump() + "\n";
  if (s.log_y) out += "# log_y: true\n";
  for (std::size_t c = 0; c < s.columns.size(); ++c) out += (c ? "," : "") + s.columns[c];
  out += "\n";
  for (const auto& row : s.rows) {
    if (row.size() != s.columns.size())
      throw Error(ErrorKind::malformed_series, "series '" + s.name + "' has a ragged row");
    for (std::size_t c = 0; c < row.size(); ++c) out += (c ? "," : "") + format_double(row[c]);
    out += "\n";
  }
  return out;
}

}  // namespace amz
