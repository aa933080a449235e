#pragma once

// Run configuration files.
//
// The format is a small subset of TOML:
//
//   # comment
//   seed = 42                      # integers, floats, booleans, "strings"
//   grid_n = 4096
//   [system]
//   x0 = 0.75
//   y0 = 0.5
//   [p0]
//   family = "piecewise_linear"
//   points = [[0.0, 0.3], [0.5, 0.7], [1.0, 0.3]]
//
// Tables are one level deep and may also be written inline
// (p0 = { family = "affine", v0 = 0.4, v1 = 0.6 }). Arrays may span lines.
// Unknown and duplicate keys are errors.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "amz/error.hpp"
#include "amz/experiments.hpp"
#include "amz/ifs_core.hpp"
#include "amz/prob_field.hpp"
#include "amz/report.hpp"

namespace amz {

struct SourceLocation {
  std::size_t line = 0;
  std::size_t column = 0;
};

/// Parsed key-value tree plus the location of every key ("table.key").
struct ConfigDocument {
  json root = json::object();
  std::map<std::string, SourceLocation> where;
};

namespace detail {

class ConfigLexer {
 public:
  explicit ConfigLexer(const std::string& text) : text_(text) {}

  ConfigDocument parse() {
    ConfigDocument doc;
    json* table = &doc.root;
    std::string table_name;
    while (true) {
      skip_blank_lines();
      if (eof()) break;
      if (peek() == '[') {
        const SourceLocation at = loc();
        get();
        skip_spaces();
        table_name = bare_key();
        skip_spaces();
        expect(']');
        end_of_line();
        if (doc.root.contains(table_name)) fail(at, "duplicate table '" + table_name + "'");
        doc.root[table_name] = json::object();
        doc.where[table_name] = at;
        table = &doc.root[table_name];
        continue;
      }
      const SourceLocation at = loc();
      const std::string key = bare_key();
      const std::string path = table_name.empty() ? key : table_name + "." + key;
      skip_spaces();
      expect('=');
      skip_spaces();
      if (table->contains(key)) fail(at, "duplicate key '" + path + "'");
      doc.where[path] = at;
      (*table)[key] = value(path, doc, table_name.empty());
      end_of_line();
    }
    return doc;
  }

 private:
  bool eof() const { return pos_ >= text_.size(); }
  char peek() const { return eof() ? '\0' : text_[pos_]; }
  SourceLocation loc() const { return {line_, col_}; }

  char get() {
    const char c = text_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  [[noreturn]] static void fail(SourceLocation at, const std::string& msg) {
    throw Error(ErrorKind::parse,
                "line " + std::to_string(at.line) + ", column " + std::to_string(at.column) + ": " + msg);
  }
  [[noreturn]] void fail(const std::string& msg) const { fail(loc(), msg); }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    get();
  }

  void skip_spaces() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) get();
  }

  void skip_comment() {
    if (peek() == '#')
      while (!eof() && peek() != '\n') get();
  }

  // Whitespace, newlines and comments; used between lines and inside arrays.
  void skip_blank_lines() {
    while (!eof()) {
      skip_spaces();
      skip_comment();
      if (peek() == '\n' || peek() == '\r') {
        get();
        continue;
      }
      break;
    }
  }

  void end_of_line() {
    skip_spaces();
    skip_comment();
    if (peek() == '\r') get();
    if (eof()) return;
    if (peek() != '\n') fail("unexpected text after value");
    get();
  }

  std::string bare_key() {
    std::string k;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-'))
      k += get();
    if (k.empty()) fail("expected a key");
    return k;
  }

  json value(const std::string& path, ConfigDocument& doc, bool allow_table) {
    const char c = peek();
    if (c == '"') return string_value();
    if (c == '[') return array_value(path, doc);
    if (c == '{') {
      if (!allow_table) fail("inline tables are only allowed at top level");
      return inline_table(path, doc);
    }
    if (c == 't' || c == 'f') {
      const std::string word = bare_key();
      if (word == "true") return true;
      if (word == "false") return false;
      fail("unknown literal '" + word + "'");
    }
    return number_value();
  }

  json string_value() {
    expect('"');
    std::string s;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      const char c = get();
      if (c == '"') break;
      if (c == '\\') {
        if (eof()) fail("unterminated string");
        const char e = get();
        switch (e) {
          case '"': s += '"'; break;
          case '\\': s += '\\'; break;
          case 'n': s += '\n'; break;
          case 't': s += '\t'; break;
          default: fail(std::string("unknown escape '\\") + e + "'");
        }
      } else {
        s += c;
      }
    }
    return s;
  }

  json number_value() {
    const SourceLocation at = loc();
    std::string tok;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '+' || peek() == '-' ||
                      peek() == '.' || peek() == '_'))
      tok += get();
    if (tok.empty()) fail(at, "expected a value");
    std::string digits;
    for (char c : tok)
      if (c != '_') digits += c;
    const bool is_float = digits.find_first_of(".eE") != std::string::npos;
    const char* b = digits.data();
    const char* e = b + digits.size();
    if (!is_float) {
      if (digits[0] == '-') {
        std::int64_t v = 0;
        auto [p, ec] = std::from_chars(b, e, v);
        if (ec == std::errc() && p == e) return v;
      } else {
        std::uint64_t v = 0;
        auto [p, ec] = std::from_chars(digits[0] == '+' ? b + 1 : b, e, v);
        if (ec == std::errc() && p == e) return v;
      }
    } else {
      double v = 0;
      auto [p, ec] = std::from_chars(digits[0] == '+' ? b + 1 : b, e, v);
      if (ec == std::errc() && p == e && std::isfinite(v)) return v;
    }
    fail(at, "malformed number '" + tok + "'");
  }

  json array_value(const std::string& path, ConfigDocument& doc) {
    expect('[');
    json arr = json::array();
    while (true) {
      skip_blank_lines();
      if (peek() == ']') break;
      if (peek() == '{') fail("tables inside arrays are not supported");
      arr.push_back(value(path, doc, false));
      skip_blank_lines();
      if (peek() == ',') {
        get();
        continue;
      }
      if (peek() != ']') fail("expected ',' or ']' in array");
    }
    get();
    return arr;
  }

  json inline_table(const std::string& path, ConfigDocument& doc) {
    expect('{');
    json t = json::object();
    skip_spaces();
    if (peek() == '}') {
      get();
      return t;
    }
    while (true) {
      skip_spaces();
      const SourceLocation at = loc();
      const std::string key = bare_key();
      const std::string sub = path + "." + key;
      skip_spaces();
      expect('=');
      skip_spaces();
      if (t.contains(key)) fail(at, "duplicate key '" + sub + "'");
      doc.where[sub] = at;
      t[key] = value(sub, doc, false);
      skip_spaces();
      if (peek() == ',') {
        get();
        continue;
      }
      if (peek() == '}') {
        get();
        return t;
      }
      fail("expected ',' or '}' in inline table");
    }
  }

  const std::string& text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

}  // namespace detail

inline ConfigDocument parse_document(const std::string& text) { return detail::ConfigLexer(text).parse(); }

struct RunConfig {
  double x0 = 0.75;
  double y0 = 0.5;
  ProbField field = ProbField::constant(0.5);
  std::uint64_t seed = 0;
  std::uint64_t grid_n = 4096;
  std::uint64_t threads = 1;
  std::string output_dir;  // empty: use the command-line or environment default

  EscapeConfig escape;
  Prop1Config prop1;
  Prop2Config prop2;
  ReachConfig reach;
  StationaryConfig stationary;
  StabilityConfig stability;
  SllnConfig slln;
  EquicontinuityConfig equicontinuity;

  bool operator==(const RunConfig& o) const {
    return x0 == o.x0 && y0 == o.y0 && field == o.field && seed == o.seed && grid_n == o.grid_n &&
           threads == o.threads && output_dir == o.output_dir && escape.echo() == o.escape.echo() &&
           prop1.echo() == o.prop1.echo() && prop2.echo() == o.prop2.echo() && reach.echo() == o.reach.echo() &&
           stationary.echo() == o.stationary.echo() && stability.echo() == o.stability.echo() &&
           slln.echo() == o.slln.echo() && equicontinuity.echo() == o.equicontinuity.echo();
  }

  SystemParams system() const { return SystemParams::unchecked(x0, y0); }

  ExperimentContext context() const {
    return {system(), field, seed, static_cast<std::size_t>(grid_n), static_cast<unsigned>(threads)};
  }
};

namespace detail {

/// Reads the keys of one table, remembering which were consumed.
class TableReader {
 public:
  TableReader(const json& table, std::string name, const ConfigDocument& doc)
      : table_(table), name_(std::move(name)), doc_(doc) {
    if (!table_.is_object()) error(name_, "'" + name_ + "' must be a table");
  }

  bool has(const std::string& key) const { return table_.contains(key); }
  void consume(const std::string& key) { used_.push_back(key); }

  template <class T>
  void read(const std::string& key, T& out) {
    if (!table_.contains(key)) return;
    used_.push_back(key);
    out = convert<T>(table_.at(key), path(key));
  }

  template <class T>
  T require(const std::string& key) {
    if (!table_.contains(key)) error(name_, "missing key '" + path(key) + "'");
    used_.push_back(key);
    return convert<T>(table_.at(key), path(key));
  }

  void finish() const {
    for (const auto& [key, _] : table_.items())
      if (std::find(used_.begin(), used_.end(), key) == used_.end()) error(path(key), "unknown key '" + path(key) + "'");
  }

 private:
  std::string path(const std::string& key) const { return name_.empty() ? key : name_ + "." + key; }

  [[noreturn]] void error(const std::string& p, const std::string& msg) const {
    auto it = doc_.where.find(p);
    if (it == doc_.where.end()) throw Error(ErrorKind::parse, msg);
    throw Error(ErrorKind::parse, "line " + std::to_string(it->second.line) + ", column " +
                                      std::to_string(it->second.column) + ": " + msg);
  }

  template <class T>
  T convert(const json& v, const std::string& p) const {
    if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) error(p, "'" + p + "' must be a number");
      return v.get<double>();
    } else if constexpr (std::is_same_v<T, std::uint64_t> || std::is_same_v<T, unsigned>) {
      if (v.is_number_unsigned()) return static_cast<T>(v.get<std::uint64_t>());
      // Integral floats such as 1e5 are accepted for counts.
      if (v.is_number_float()) {
        const double d = v.get<double>();
        if (d >= 0.0 && d < 1.8e19 && std::floor(d) == d) return static_cast<T>(d);
      }
      error(p, "'" + p + "' must be a non-negative integer");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) error(p, "'" + p + "' must be true or false");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) error(p, "'" + p + "' must be a string");
      return v.get<std::string>();
    } else {
      using E = typename T::value_type;
      if (!v.is_array()) error(p, "'" + p + "' must be an array");
      T out;
      for (const auto& e : v) out.push_back(convert<E>(e, p));
      return out;
    }
  }

  const json& table_;
  std::string name_;
  const ConfigDocument& doc_;
  std::vector<std::string> used_;
};

inline ProbField read_field(TableReader& t) {
  const auto family = t.require<std::string>("family");
  std::optional<double> delta, lip;
  if (t.has("delta")) delta = t.require<double>("delta");
  if (t.has("lipschitz")) lip = t.require<double>("lipschitz");
  FieldFamily f;
  if (family == "constant") {
    f = ConstantFamily{t.require<double>("p")};
  } else if (family == "affine") {
    f = AffineFamily{t.require<double>("v0"), t.require<double>("v1")};
  } else if (family == "piecewise_linear") {
    const auto pts = t.require<std::vector<std::vector<double>>>("points");
    PiecewiseLinearFamily pl;
    for (const auto& p : pts) {
      if (p.size() != 2) throw Error(ErrorKind::parse, "p0.points entries must be [x, p0] pairs");
      pl.points.emplace_back(p[0], p[1]);
    }
    f = std::move(pl);
  } else if (family == "logistic") {
    f = LogisticFamily{t.require<double>("center"), t.require<double>("steepness"), t.require<double>("low"),
                       t.require<double>("high")};
  } else {
    throw Error(ErrorKind::parse, "unknown p0 family '" + family + "'");
  }
  t.finish();
  try {
    return ProbField(std::move(f), delta, lip);
  } catch (const Error& e) {
    throw Error(ErrorKind::validation, e.what());
  }
}

inline void check_params(const RunConfig& c) {
  auto bad = [](const std::string& m) { throw Error(ErrorKind::validation, m); };
  if (c.grid_n < 8) bad("grid_n must be at least 8");
  if (c.threads < 1 || c.threads > 1024) bad("threads must be in [1, 1024]");
  if (c.escape.samples == 0) bad("escape.samples must be positive");
  if (c.prop1.pairs == 0 && c.prop1.exhaustive_depth == 0) bad("prop1 has nothing to check");
  if (c.prop1.exhaustive_depth > 24) bad("prop1.exhaustive_depth must be at most 24");
  if (c.prop2.pairs == 0 || !(c.prop2.n_min + 2 <= c.prop2.n_max)) bad("prop2 needs pairs > 0 and n_min + 2 <= n_max");
  if (!(c.prop2.confidence > 0.5 && c.prop2.confidence < 1.0)) bad("prop2.confidence must be in (0.5, 1)");
  if (!(c.prop2.quantile > 0.0 && c.prop2.quantile < 1.0)) bad("prop2.quantile must be in (0, 1)");
  if (!(c.reach.xi > 0.0 && c.reach.xi < 0.5) || !(c.reach.rho > 0.0) || c.reach.x_points < 2 ||
      c.reach.runs == 0 || c.reach.ns.empty() || c.reach.ns.size() > 32)
    bad("reach needs 0 < xi < 1/2, rho > 0, x_points >= 2, runs > 0 and 1..32 horizons");
  if (!(c.stationary.tol > 0.0) || c.stationary.starts.empty() || c.stationary.mc_steps == 0)
    bad("stationary needs tol > 0, starts and mc_steps > 0");
  for (double s : c.stationary.starts)
    if (!(s >= 0.0 && s <= 1.0)) bad("stationary.starts must lie in [0, 1]");
  if (!(c.stationary.mc_start > 0.0 && c.stationary.mc_start < 1.0)) bad("stationary.mc_start must lie in (0, 1)");
  if (c.stability.starts.size() != 2) bad("stability.starts must hold two points");
  for (double s : c.stability.starts)
    if (!(s >= 0.0 && s <= 1.0)) bad("stability.starts must lie in [0, 1]");
  if (c.slln.steps == 0 || c.slln.seeds == 0 || c.slln.starts.empty() || c.slln.functions.empty())
    bad("slln needs steps, seeds, starts and functions");
  for (double s : c.slln.starts)
    if (!(s > 0.0 && s < 1.0)) bad("slln.starts must lie in (0, 1)");
  for (const auto& f : c.slln.functions) make_test_function(f, 0.5, c.slln.smoothing);
  if (c.equicontinuity.ds.empty() || c.equicontinuity.probe_subdivision == 0)
    bad("equicontinuity needs ds and probe_subdivision > 0");
  for (double d : c.equicontinuity.ds)
    if (!(d > 0.0)) bad("equicontinuity.ds must be positive");
  make_test_function(c.equicontinuity.function, 0.5);
}

}  // namespace detail

struct ValidationResult {
  AssumptionReport assumptions;
  FieldReport field;
};

/// Runs the assumption and field checks; throws validation-error naming
/// every failed assumption.
inline ValidationResult validate_config(const RunConfig& cfg) {
  if (!(cfg.x0 > 0.0 && cfg.x0 < 1.0 && cfg.y0 > 0.0 && cfg.y0 < 1.0))
    throw Error(ErrorKind::validation, "(A1) violated: x0 and y0 must lie in (0,1)");
  ValidationResult v{validate_assumptions(cfg.system(), cfg.field), validate_field(cfg.field)};
  std::string failed;
  const bool ok[4] = {v.assumptions.a1_ok, v.assumptions.a2_ok, v.assumptions.a3_ok, v.assumptions.a4_ok};
  for (int k = 0; k < 4; ++k)
    if (!ok[k]) failed += (failed.empty() ? "" : "; ") + std::string("(A") + std::to_string(k + 1) + ") " + v.assumptions.detail[k];
  if (!failed.empty()) throw Error(ErrorKind::validation, failed);
  detail::check_params(cfg);
  return v;
}

inline RunConfig config_from_document(const ConfigDocument& doc) {
  RunConfig c;
  detail::TableReader top(doc.root, "", doc);
  top.read("seed", c.seed);
  top.read("grid_n", c.grid_n);
  top.read("threads", c.threads);
  top.read("output_dir", c.output_dir);

  auto section = [&](const std::string& name, auto&& body) {
    if (!doc.root.contains(name)) return;
    detail::TableReader t(doc.root.at(name), name, doc);
    body(t);
    t.finish();
    top.consume(name);
  };
  if (!doc.root.contains("system")) throw Error(ErrorKind::parse, "missing table [system]");
  section("system", [&](auto& t) {
    c.x0 = t.template require<double>("x0");
    c.y0 = t.template require<double>("y0");
  });
  if (!doc.root.contains("p0")) throw Error(ErrorKind::parse, "missing table [p0]");
  {
    detail::TableReader t(doc.root.at("p0"), "p0", doc);
    c.field = detail::read_field(t);
    top.consume("p0");
  }
  section("escape", [&](auto& t) {
    t.read("xs", c.escape.xs);
    t.read("ns", c.escape.ns);
    t.read("samples", c.escape.samples);
    t.read("sides", c.escape.sides);
    t.read("inject_offset", c.escape.inject_offset);
  });
  section("prop1", [&](auto& t) {
    t.read("pairs", c.prop1.pairs);
    t.read("word_length", c.prop1.word_length);
    t.read("probe_x", c.prop1.probe_x);
    t.read("probe_y", c.prop1.probe_y);
    t.read("exhaustive_depth", c.prop1.exhaustive_depth);
    t.read("bound_scale", c.prop1.bound_scale);
    t.read("tolerance", c.prop1.tolerance);
  });
  section("prop2", [&](auto& t) {
    t.read("x", c.prop2.x);
    t.read("y", c.prop2.y);
    t.read("pairs", c.prop2.pairs);
    t.read("n_min", c.prop2.n_min);
    t.read("n_max", c.prop2.n_max);
    t.read("ratio", c.prop2.ratio);
    t.read("confidence", c.prop2.confidence);
    t.read("quantile", c.prop2.quantile);
  });
  section("reach", [&](auto& t) {
    t.read("rho", c.reach.rho);
    t.read("xi", c.reach.xi);
    t.read("ns", c.reach.ns);
    t.read("runs", c.reach.runs);
    t.read("x_points", c.reach.x_points);
  });
  section("stationary", [&](auto& t) {
    t.read("tol", c.stationary.tol);
    t.read("max_iter", c.stationary.max_iter);
    t.read("starts", c.stationary.starts);
    t.read("mc_steps", c.stationary.mc_steps);
    t.read("mc_start", c.stationary.mc_start);
    t.read("mc_tol", c.stationary.mc_tol);
    t.read("cesaro", c.stationary.cesaro);
    t.read("tail_tolerance", c.stationary.tail_tolerance);
  });
  section("stability", [&](auto& t) {
    t.read("horizon", c.stability.horizon);
    t.read("tol", c.stability.tol);
    t.read("monotone_tol", c.stability.monotone_tol);
    t.read("starts", c.stability.starts);
    t.read("report_at", c.stability.report_at);
    t.read("require_monotone", c.stability.require_monotone);
  });
  section("slln", [&](auto& t) {
    t.read("starts", c.slln.starts);
    t.read("steps", c.slln.steps);
    t.read("tol", c.slln.tol);
    t.read("functions", c.slln.functions);
    t.read("seeds", c.slln.seeds);
    t.read("smoothing", c.slln.smoothing);
    t.read("stationary_tol", c.slln.stationary_tol);
    t.read("max_iter", c.slln.max_iter);
  });
  section("equicontinuity", [&](auto& t) {
    t.read("horizon", c.equicontinuity.horizon);
    t.read("ds", c.equicontinuity.ds);
    t.read("function", c.equicontinuity.function);
    t.read("probe_radius", c.equicontinuity.probe_radius);
    t.read("probe_subdivision", c.equicontinuity.probe_subdivision);
    t.read("bound_factor", c.equicontinuity.bound_factor);
  });
  top.finish();
  return c;
}

/// Parses and, unless told otherwise, validates eagerly.
inline RunConfig parse_config(const std::string& text, bool validate = true) {
  RunConfig c = config_from_document(parse_document(text));
  if (validate) validate_config(c);
  return c;
}

/// The complete parameter record, defaults included.
inline json config_to_json(const RunConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["grid_n"] = c.grid_n;
  j["threads"] = c.threads;
  j["output_dir"] = c.output_dir;
  j["system"] = json{{"x0", c.x0}, {"y0", c.y0}};
  j["p0"] = field_to_json(c.field);
  j["escape"] = c.escape.echo();
  j["prop1"] = c.prop1.echo();
  j["prop2"] = c.prop2.echo();
  j["reach"] = c.reach.echo();
  j["stationary"] = c.stationary.echo();
  j["stability"] = c.stability.echo();
  j["slln"] = c.slln.echo();
  j["equicontinuity"] = c.equicontinuity.echo();
  return j;
}

namespace detail {

inline std::string config_value(const json& v) {
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number_float()) {
    std::string s = format_double(v.get<double>());
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
  }
  if (v.is_string()) {
    std::string s = "\"";
    for (char ch : v.get<std::string>()) {
      if (ch == '"' || ch == '\\') s += '\\';
      if (ch == '\n') {
        s += "\\n";
        continue;
      }
      if (ch == '\t') {
        s += "\\t";
        continue;
      }
      s += ch;
    }
    return s + "\"";
  }
  if (v.is_array()) {
    std::string s = "[";
    for (std::size_t k = 0; k < v.size(); ++k) s += (k ? ", " : "") + config_value(v[k]);
    return s + "]";
  }
  throw Error(ErrorKind::parameter, "cannot serialize configuration value");
}

}  // namespace detail

/// Text form that parses back to an equal RunConfig.
inline std::string serialize_config(const RunConfig& c) {
  const json j = config_to_json(c);
  std::string out;
  for (const auto& [k, v] : j.items())
    if (!v.is_object()) out += k + " = " + detail::config_value(v) + "\n";
  for (const auto& [k, v] : j.items()) {
    if (!v.is_object()) continue;
    out += "\n[" + k + "]\n";
    for (const auto& [kk, vv] : v.items()) out += kk + " = " + detail::config_value(vv) + "\n";
  }
  return out;
}

}  // namespace amz
