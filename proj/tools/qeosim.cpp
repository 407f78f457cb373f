// qeosim — command-line driver for the converter simulation library.
//
//   qeosim <design|width-sweep|matrix-verify|ode-verify|encode|ser|report>
//          --config <path> --out <dir> [--seed <u64>] [--n <count>]
//
// Exit codes: 0 success; 2 configuration/validation failure; 3 numerical
// tolerance failure (verify subcommands and truncation/refinement limits).
// Seed precedence: --seed, then the QEOSIM_SEED environment variable, then
// mc.seed from the config.

#include <cstdlib>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "qeosim/config.hpp"
#include "qeosim/scenario.hpp"
#include "qeosim/version.hpp"

namespace {

std::optional<std::uint64_t> env_seed() {
  const char* raw = std::getenv("QEOSIM_SEED");
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(raw, &pos);
    if (raw[pos] != '\0') throw std::invalid_argument("trailing characters");
    return static_cast<std::uint64_t>(v);
  } catch (const std::exception&) {
    throw qeosim::config_error(std::string("QEOSIM_SEED: not a valid unsigned integer: '") +
                               raw + "'");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Microwave-to-optical converter simulation"};
  app.set_version_flag("--version", std::string(qeosim::kVersionString));
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed_flag;
  std::optional<std::uint64_t> n_flag;

  const std::vector<std::string> names{"design",     "width-sweep", "matrix-verify",
                                       "ode-verify", "encode",      "ser",
                                       "report"};
  const std::vector<std::string> blurbs{
      "optimum geometry and modulation-depth summary",
      "single-element sideband probabilities vs element width",
      "cascade/closed-form and unitarity checks",
      "numerically integrated transit phase vs closed form",
      "phase-space sample clouds per constellation symbol",
      "Monte Carlo symbol-error-rate estimate",
      "full reproduction suite (design, sweep, encode/SER grid)"};
  for (std::size_t i = 0; i < names.size(); ++i) {
    CLI::App* sub = app.add_subcommand(names[i], blurbs[i]);
    sub->add_option("--config", config_path, "JSON scenario configuration")->required();
    sub->add_option("--out", out_dir, "output directory")->required();
    sub->add_option("--seed", seed_flag, "override the Monte Carlo seed");
    sub->add_option("--n", n_flag, "override the per-subcommand count "
                                   "(sweep points / samples / trials)");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string cmd = app.get_subcommands().front()->get_name();

  try {
    qeosim::ScenarioConfig cfg = qeosim::load_config(config_path);
    if (const auto es = env_seed()) cfg.mc.seed = *es;
    if (seed_flag) cfg.mc.seed = *seed_flag;
    for (const auto& msg : cfg.warnings) std::cerr << "warning: " << msg << "\n";

    if (cmd == "design") return qeosim::run_design(cfg, out_dir);
    if (cmd == "width-sweep") return qeosim::run_width_sweep(cfg, out_dir, n_flag);
    if (cmd == "matrix-verify") return qeosim::run_matrix_verify(cfg, out_dir);
    if (cmd == "ode-verify") return qeosim::run_ode_verify(cfg, out_dir);
    if (cmd == "encode") return qeosim::run_encode(cfg, out_dir, n_flag);
    if (cmd == "ser") return qeosim::run_ser(cfg, out_dir, n_flag);
    if (cmd == "report") return qeosim::run_report(cfg, out_dir);
    std::cerr << "error: unknown subcommand '" << cmd << "'\n";
    return 2;
  } catch (const qeosim::truncation_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const qeosim::refinement_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const qeosim::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const std::out_of_range& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
