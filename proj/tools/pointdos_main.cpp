#include <CLI11.hpp>

#include <optional>
#include <string>

#include "pointdos/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Density-of-states toolkit for lattice point interactions"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  int threads = 1;
  std::uint64_t seed = 0;
  bool seed_set = false;

  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--out", out_dir, "output directory (defaults to config output.directory)");
  app.add_option("--threads", threads, "worker threads for grid sweeps");
  app.add_option("--seed", seed, "override mc.seed")->each([&](const std::string&) {
    seed_set = true;
  });

  for (const char* name : {"kernels", "gap-check", "sweep", "band", "expand", "dos",
                           "mc-validate", "conductivity"})
    app.add_subcommand(name);

  CLI11_PARSE(app, argc, argv);

  const std::string cmd = app.get_subcommands().front()->get_name();
  return pointdos::run_subcommand(cmd, config_path, out_dir, threads,
                                  seed_set ? std::optional<std::uint64_t>(seed) : std::nullopt);
}
