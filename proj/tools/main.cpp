#include <CLI11.hpp>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "spectra/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Eigenvalue asymptotics for periodic matrix Schrodinger operators on a box"};
  std::string mode, config_path, out;
  std::optional<std::uint64_t> seed;
  std::vector<double> rho;
  std::optional<int> order;
  app.add_option("mode", mode, "classify | solve1d | solvefull | predict | compare | measure")
      ->required()
      ->check(CLI::IsMember({"classify", "solve1d", "solvefull", "predict", "compare", "measure"}));
  app.add_option("--config", config_path, "run configuration (JSON)")->required();
  app.add_option("--out", out, "output directory");
  app.add_option("--seed", seed, "generator and Monte Carlo seed");
  app.add_option("--rho", rho, "rho grid, comma separated")->delimiter(',');
  app.add_option("--order", order, "highest prediction order s");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : spectra::exit_code(spectra::ErrorKind::Config);
  }

  spectra::RunConfig cfg;
  try {
    cfg = spectra::load_config(config_path);
    cfg.mode = spectra::parse_mode(mode);
    if (!out.empty()) cfg.output = out;
    if (seed) cfg.generator.seed = cfg.mc_seed = *seed;
    if (!rho.empty()) cfg.rho = rho;
    if (order) cfg.order = *order;
    spectra::validate(cfg);
  } catch (const spectra::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return spectra::exit_code(e.kind());
  }
  return spectra::run(cfg, std::cerr);
}
