#include "polydiff/cli.hpp"

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "polydiff/config.hpp"
#include "polydiff/errors.hpp"
#include "polydiff/runner.hpp"

namespace polydiff {

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"viscoelastic polymer diffusion: simulator and long-time "
               "behaviour diagnostics"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  std::optional<std::uint64_t> seed_override;
  int threads = 0;

  auto add_subcommand = [&](const char* name, const char* desc) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", config_path, "run configuration (json)")
        ->required();
    sub->add_option("--out", out_override,
                    "output directory (default: output.directory from the "
                    "config)");
    sub->add_option("--seed", seed_override, "override the config seed");
    sub->add_option("--threads", threads,
                    "worker threads (default: POLYDIFF_THREADS env or 1)");
    return sub;
  };

  CLI::App* sim = add_subcommand(
      "simulate", "integrate one trajectory and write its energy series");
  CLI::App* dis = add_subcommand(
      "dissipation",
      "calibrate and validate the energy dissipation / absorbing-set bound");
  CLI::App* att = add_subcommand(
      "attract", "attraction functional over a trajectory ensemble");
  CLI::App* mms = add_subcommand(
      "mms", "manufactured-solution convergence tables");
  CLI::App* ver =
      add_subcommand("verify", "run the full certification suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    RunConfig cfg = load_config(config_path);
    if (seed_override) cfg.seed = *seed_override;
    const std::filesystem::path out =
        out_override.empty() ? std::filesystem::path(cfg.output_directory)
                             : std::filesystem::path(out_override);
    const int nthreads = resolve_threads(threads);
    if (sim->parsed()) return run_simulate(cfg, out, nthreads, std::cout);
    if (dis->parsed()) return run_dissipation(cfg, out, nthreads, std::cout);
    if (att->parsed()) return run_attract(cfg, out, nthreads, std::cout);
    if (mms->parsed()) return run_mms(cfg, out, nthreads, std::cout);
    if (ver->parsed()) return run_verify(cfg, out, nthreads, std::cout);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace polydiff
