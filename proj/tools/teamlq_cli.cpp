#include <CLI11.hpp>

#include "teamlq/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "teamlq: linear-quadratic static team ensembles with log-concave noise"};

  teamlq::CliOptions options;
  std::uint64_t seed = 0;
  int workers = 0;
  std::string out_dir;

  app.add_option("--config", options.config_path, "JSON config file")
      ->required()
      ->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "override the config seed");
  auto* workers_opt =
      app.add_option("--workers", workers, "worker threads (numeric output is "
                                           "identical for any count)");
  auto* out_opt = app.add_option("--out", out_dir, "override the output directory");

  CLI11_PARSE(app, argc, argv);

  if (*seed_opt) options.seed = seed;
  if (*workers_opt) options.workers = workers;
  if (*out_opt) options.out_dir = out_dir;
  return teamlq::run(options);
}
