#include "occuriesz/runner.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace occuriesz;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitAcceptance = 3;
constexpr int kExitReproducibility = 4;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out;
};

void add_common(CLI::App* app, Common& c, bool config_required) {
  auto* opt = app->add_option("--config", c.config, "experiment config (YAML or JSON)");
  if (config_required) opt->required()->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "master seed, overrides the config");
  app->add_option("--workers", c.workers, "worker threads (default: OCCURIESZ_WORKERS or all cores)");
  app->add_option("--out", c.out, "output directory, overrides the config");
}

void print_manifest(const ExperimentManifest& m) {
  std::cout << "config " << m.config_hash.substr(0, 16) << ": " << m.files.size() << " file(s) in "
            << m.directory.string() << " (" << m.wall_seconds << " s, " << m.workers << " worker(s))\n";
  for (const auto& c : m.checks)
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << (c.detail.empty() ? "" : " (" + c.detail + ")") << "\n";
}

int run_group(const std::string& group, const Common& c) {
  ExperimentConfig cfg = load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (c.workers) cfg.workers = *c.workers;
  if (c.out) cfg.output = *c.out;
  if (operation_group(cfg.operation) != group) {
    std::string names;
    for (const auto& n : operations_in(group)) names += (names.empty() ? "" : ", ") + n;
    throw ValidationError({"operation: '" + cfg.operation + "' does not belong to '" + group + "' (expected one of " +
                           names + ")"});
  }
  const ExperimentManifest m = run(cfg);
  print_manifest(m);
  return m.checks_passed() ? 0 : kExitAcceptance;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"occupation measures, Riesz potentials and path regularity experiments"};
  app.set_version_flag("--version", std::string(OCCURIESZ_VERSION));
  app.require_subcommand(1);

  Common common;
  const char* groups[][2] = {{"simulate", "simulate sample paths"},
                             {"potential", "rescaled Riesz potentials of occupation measures"},
                             {"limits", "density limits and averaging kernels"},
                             {"regularity", "scaling fits for potentials and oscillations"},
                             {"oracle", "assumption sweeps and proof identities"}};
  std::vector<std::pair<std::string, CLI::App*>> runners;
  for (const auto& g : groups) {
    CLI::App* sub = app.add_subcommand(g[0], g[1]);
    add_common(sub, common, true);
    runners.emplace_back(g[0], sub);
  }

  std::string manifest;
  CLI::App* rep = app.add_subcommand("replay", "re-run a manifest and compare checksums");
  rep->add_option("manifest", manifest, "manifest.json of a previous run")->required()->check(CLI::ExistingFile);
  add_common(rep, common, false);

  std::vector<std::string> inputs;
  std::string plot_out = "plotdata";
  bool no_svg = false;
  CLI::App* plot = app.add_subcommand("plotdata", "turn result files into plot-ready series");
  plot->add_option("results", inputs, "result JSON files")->required()->check(CLI::ExistingFile);
  plot->add_option("--out", plot_out, "output directory");
  plot->add_flag("--no-svg", no_svg, "skip the SVG rendering");

  CLI11_PARSE(app, argc, argv);

  try {
    for (const auto& [name, sub] : runners)
      if (sub->parsed()) return run_group(name, common);
    if (rep->parsed()) {
      ReplayOptions o;
      o.workers = common.workers;
      o.seed = common.seed;
      if (common.out) o.output = *common.out;
      const ExperimentManifest m = replay(manifest, o);
      print_manifest(m);
      std::cout << "replay matches " << m.files.size() << " checksum(s)\n";
      return 0;
    }
    if (plot->parsed()) {
      for (const auto& f : emit_plotdata({inputs.begin(), inputs.end()}, plot_out, !no_svg)) std::cout << f.string() << "\n";
      return 0;
    }
  } catch (const ValidationError& e) {
    std::cerr << e.what() << "\n";
    return kExitValidation;
  } catch (const ReproducibilityError& e) {
    std::cerr << e.what() << "\n";
    return kExitReproducibility;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
