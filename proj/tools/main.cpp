#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "blochhom/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Bloch-wave homogenization of a stochastic parabolic equation"};
  app.set_version_flag("--version", std::string(blochhom::kVersion));
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  int threads = 0;
  app.add_option("--config", config_path, "configuration file")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory (overrides the `output` key)");
  auto* seed_opt = app.add_option("--seed", seed, "base seed of the noise paths");
  auto* threads_opt = app.add_option("--threads", threads, "OpenMP threads")->check(CLI::NonNegativeNumber);
  app.fallthrough();

  for (const char* cmd : {"bands", "critical", "correctors", "effective", "simulate", "verify"})
    app.add_subcommand(cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : blochhom::kExitInput;
  }

  blochhom::CliRequest req;
  req.command = app.get_subcommands().front()->get_name();
  std::ifstream in(config_path, std::ios::binary);
  std::ostringstream text;
  text << in.rdbuf();
  req.config_text = text.str();
  req.out_dir = out_dir;
  if (*seed_opt) req.seed = seed;
  if (*threads_opt) req.threads = threads;
  return blochhom::dispatch(req, std::cerr);
}
