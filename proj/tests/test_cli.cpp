#include <cstdlib>
#include <filesystem>
#include <set>
#include <sstream>
#include <string>

#include "catch_amalgamated.hpp"

#include "amz/cli.hpp"

using namespace amz;
using Catch::Matchers::ContainsSubstring;
namespace fs = std::filesystem;

namespace {

const std::string kMinimal = R"(seed = 20240611
grid_n = 4096

[system]
x0 = 0.75
y0 = 0.5

[p0]
family = "constant"
p = 0.5
)";

ErrorKind kind_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::io;
}

std::string message_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("amz_test_cli_" + name);
  fs::remove_all(p);
  return p;
}

RunConfig config_file(const std::string& name, bool validate = true) {
  return parse_config(read_text_file(std::string(AMZ_CONFIG_DIR) + "/" + name), validate);
}

}  // namespace

TEST_CASE("a minimal config gets every default filled in") {
  const RunConfig c = parse_config(kMinimal);
  CHECK(c.x0 == 0.75);
  CHECK(c.y0 == 0.5);
  CHECK(c.seed == 20240611);
  CHECK(c.grid_n == 4096);
  CHECK(c.escape.samples == EscapeConfig{}.samples);
  CHECK(c.stationary.tol == StationaryConfig{}.tol);
  CHECK(c.stability.horizon == StabilityConfig{}.horizon);
  const json echo = config_to_json(c);
  for (const char* k : {"seed", "grid_n", "system", "p0", "escape", "prop1", "prop2", "reach", "stationary",
                        "stability", "slln", "equicontinuity"})
    CHECK(echo.contains(k));
}

TEST_CASE("a config outside (A1) is a validation error") {
  std::string text = kMinimal;
  text.replace(text.find("y0 = 0.5"), 8, "y0 = 0.8");
  CHECK(kind_of(text) == ErrorKind::validation);
  CHECK_THAT(message_of(text), ContainsSubstring("(A1)"));
  // Parsing without validation still succeeds.
  CHECK(parse_config(text, false).y0 == 0.8);
}

TEST_CASE("an unknown key is a parse error with its location") {
  std::string text = kMinimal;
  text.replace(text.find("y0 = 0.5"), 8, "y0 = 0.5\nalpha0 = 0.3");
  CHECK(kind_of(text) == ErrorKind::parse);
  const std::string msg = message_of(text);
  CHECK_THAT(msg, ContainsSubstring("alpha0"));
  CHECK_THAT(msg, ContainsSubstring("line 7"));
  CHECK_THAT(msg, ContainsSubstring("column 1"));
}

TEST_CASE("malformed documents are parse errors") {
  CHECK(kind_of("seed = \n") == ErrorKind::parse);
  CHECK(kind_of(kMinimal + "[escape]\nsamples = \"many\"\n") == ErrorKind::parse);
  CHECK(kind_of(kMinimal + "seed = 3\n[system]\n") == ErrorKind::parse);
  CHECK(kind_of("[system]\nx0 = 0.75\ny0 = 0.5\n") == ErrorKind::parse);
  CHECK(kind_of("name = \"open\n") == ErrorKind::parse);
}

TEST_CASE("serialized configs parse back to equal configs") {
  for (const char* name : {"e1.toml", "e1_smoke.toml", "affine.toml", "logistic.toml"}) {
    const RunConfig c = config_file(name);
    const RunConfig back = parse_config(serialize_config(c));
    CHECK(back == c);
    CHECK(serialize_config(back) == serialize_config(c));
  }
  const RunConfig bad = config_file("invalid_a4.toml", false);
  CHECK(parse_config(serialize_config(bad), false) == bad);
}

TEST_CASE("the shipped (A4) counterexample is rejected") {
  CHECK_THROWS_AS(config_file("invalid_a4.toml"), Error);
  CHECK_THAT(message_of(read_text_file(std::string(AMZ_CONFIG_DIR) + "/invalid_a4.toml")),
             ContainsSubstring("(A4)"));
}

TEST_CASE("certificate command on E1 exits 0 and echoes the config") {
  const fs::path dir = scratch_dir("certificate");
  std::ostringstream log;
  const RunConfig c = parse_config(kMinimal);
  CHECK(run_command(c, "certificate", dir.string(), log) == kExitPass);
  const json j = json::parse(read_text_file((dir / "certificate.json").string()));
  CHECK(j.at("checks_ok").get<bool>());
  CHECK(j.at("seed").get<std::uint64_t>() == 20240611);
  CHECK(json::parse(j.at("config_echo").get<std::string>()) == config_to_json(c));
  CHECK(j.at("p").get<double>() < 1.0);
  const json summary = json::parse(read_text_file((dir / "summary.json").string()));
  CHECK(summary.at("seed").get<std::uint64_t>() == 20240611);
  CHECK(summary.at("config_echo") == config_to_json(c));
  fs::remove_all(dir);
}

TEST_CASE("a field violating (A4) makes stationary exit 2") {
  const fs::path dir = scratch_dir("a4");
  std::ostringstream log;
  CHECK(run_command(config_file("invalid_a4.toml", false), "stationary", dir.string(), log) == kExitConfig);
  CHECK_THAT(log.str(), ContainsSubstring("(A4)"));
  CHECK_FALSE(fs::exists(dir / "stationary.json"));
}

TEST_CASE("an unknown command exits 2") {
  std::ostringstream log;
  CHECK(run_command(parse_config(kMinimal), "frobnicate", scratch_dir("unknown").string(), log) == kExitConfig);
  CHECK_THAT(log.str(), ContainsSubstring("frobnicate"));
}

TEST_CASE("a failing experiment exits 1") {
  const fs::path dir = scratch_dir("short");
  RunConfig c = parse_config(kMinimal);
  c.grid_n = 256;
  c.stability.horizon = 5;
  c.stability.report_at = {1, 5};
  std::ostringstream log;
  CHECK(run_command(c, "stability", dir.string(), log) == kExitFail);
  CHECK_THAT(log.str(), ContainsSubstring("FAIL stability"));
  fs::remove_all(dir);
}

TEST_CASE("output directory precedence") {
  RunConfig c = parse_config(kMinimal);
  ::setenv(kOutDirEnv, "from_env", 1);
  CHECK(resolve_output_dir("from_cli", c) == "from_cli");
  CHECK(resolve_output_dir("", c) == "from_env");
  c.output_dir = "from_config";
  CHECK(resolve_output_dir("", c) == "from_config");
  c.output_dir.clear();
  ::unsetenv(kOutDirEnv);
  CHECK(resolve_output_dir("", c) == "amz_out");
}

TEST_CASE("plots are deterministic and reject empty series") {
  const std::string csv = "# seed: 1\nn,ks,w1\n0,1,0.5\n1,0.5,0.25\n2,0.25,0.125\n";
  const CsvTable t = parse_csv(csv);
  CHECK(t.columns == std::vector<std::string>{"n", "ks", "w1"});
  CHECK(t.rows.size() == 3);
  const PlotSpec spec{"n", {"ks", "w1"}, "decay", "n", "", true};
  const std::string a = render_svg(t, spec), b = render_svg(parse_csv(csv), spec);
  CHECK(a == b);
  CHECK_THAT(a, ContainsSubstring("<svg"));
  CHECK_THAT(a, ContainsSubstring("decay"));

  const fs::path dir = scratch_dir("plot");
  fs::create_directories(dir);
  write_text_file((dir / "s.csv").string(), csv);
  emit_plot((dir / "s.csv").string(), spec, (dir / "a.svg").string());
  emit_plot((dir / "s.csv").string(), spec, (dir / "b.svg").string());
  CHECK(read_text_file((dir / "a.svg").string()) == read_text_file((dir / "b.svg").string()));

  write_text_file((dir / "empty.csv").string(), "# seed: 1\nn,ks\n");
  CHECK_THROWS_MATCHES(emit_plot((dir / "empty.csv").string(), spec, (dir / "c.svg").string()), Error,
                       Catch::Matchers::Predicate<Error>(
                           [](const Error& e) { return e.kind() == ErrorKind::malformed_series; }));
  CHECK_THROWS_AS(parse_csv(""), Error);
  fs::remove_all(dir);
}

TEST_CASE("smoke run reproduces the golden outputs") {
  const fs::path dir = scratch_dir("golden");
  std::ostringstream log;
  const int code = run_command(config_file("e1_smoke.toml"), "all", dir.string(), log);
  INFO(log.str());
  CHECK(code == kExitPass);

  const fs::path golden(AMZ_GOLDEN_DIR);
  const char* update = std::getenv("AMZ_UPDATE_GOLDEN");
  if (update != nullptr && std::string(update) == "1") {
    fs::create_directories(golden);
    for (const auto& e : fs::directory_iterator(golden)) fs::remove(e.path());
    for (const auto& e : fs::directory_iterator(dir)) fs::copy_file(e.path(), golden / e.path().filename());
    WARN("golden files regenerated");
  }

  std::set<std::string> produced, expected;
  for (const auto& e : fs::directory_iterator(dir)) produced.insert(e.path().filename().string());
  for (const auto& e : fs::directory_iterator(golden)) expected.insert(e.path().filename().string());
  REQUIRE_FALSE(expected.empty());
  CHECK(produced == expected);
  for (const std::string& f : expected) {
    INFO(f);
    if (!produced.count(f)) continue;
    CHECK(read_text_file((dir / f).string()) == read_text_file((golden / f).string()));
  }

  // Every output carries the seed and the config echo.
  for (const std::string& f : produced) {
    INFO(f);
    const std::string text = read_text_file((dir / f).string());
    if (f.ends_with(".json")) {
      const json j = json::parse(text);
      CHECK(j.at("seed").get<std::uint64_t>() == 7);
      CHECK(j.contains("config_echo"));
    } else if (f.ends_with(".csv")) {
      CHECK(text.rfind("# seed: 7\n", 0) == 0);
      CHECK_THAT(text, ContainsSubstring("# config:"));
    }
  }
  fs::remove_all(dir);
}
