// amz <command> --config <file> [--out <dir>] [--seed <u64>] [--threads <n>]

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "amz/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Random place-dependent IFS workbench"};
  std::string command;
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;

  std::string names;
  for (const auto& c : amz::known_commands()) names += (names.empty() ? "" : ", ") + c;
  app.add_option("command", command, "one of: " + names)->required();
  app.add_option("--config,-c", config_path, "run configuration file")->required();
  app.add_option("--out,-o", out_dir,
                 std::string("output directory (default: config output_dir, then $") + amz::kOutDirEnv + ")");
  app.add_option("--seed", seed, "override the configured seed");
  app.add_option("--threads", threads, "override the configured thread count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : amz::kExitConfig;
  }

  amz::RunConfig cfg;
  try {
    cfg = amz::parse_config(amz::read_text_file(config_path), false);
    if (seed) cfg.seed = *seed;
    if (threads) cfg.threads = *threads;
    amz::validate_config(cfg);
  } catch (const amz::Error& e) {
    std::cerr << e.what() << "\n";
    return amz::kExitConfig;
  }
  return amz::run_command(cfg, command, amz::resolve_output_dir(out_dir, cfg), std::cout);
}
