#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hartree/config.hpp"
#include "hartree/errors.hpp"
#include "hartree/runner.hpp"

using namespace hartree;

namespace {

struct Opts {
  std::string config;
  std::string out;
  int threads = 0;
  std::uint64_t seed = 0;
  bool force = false;
  double tau = 0, omega_min = 0, omega_max = 0, xi = 0;
  int steps = 0;
  std::string scheme, mode, suite, input;
  bool probe = false;
};

void common(CLI::App* sub, Opts& o) {
  sub->add_option("--config", o.config, "experiment configuration (JSON)")->check(CLI::ExistingFile);
  sub->add_option("--out", o.out, "output directory");
  sub->add_option("--threads", o.threads, "worker threads (default: all cores)")->check(CLI::NonNegativeNumber);
  sub->add_option("--seed", o.seed, "overrides the configured seed");
  sub->add_flag("--force", o.force, "overwrite an earlier run; accept profiles outside the moment hypothesis");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linear response, dispersion and Hartree dynamics around homogeneous states"};
  app.require_subcommand(1);
  Opts o;

  auto* penrose = app.add_subcommand("penrose", "scan the Penrose margin; report.json, scan.csv");
  common(penrose, o);

  auto* disp = app.add_subcommand("dispersion", "line scan of the dispersion function and a root search");
  common(disp, o);
  disp->add_option("--tau", o.tau);
  disp->add_option("--omega-min", o.omega_min);
  disp->add_option("--omega-max", o.omega_max);
  disp->add_option("--xi", o.xi);
  disp->add_option("--steps", o.steps);

  auto* respond = app.add_subcommand("respond", "apply or invert the response operator on a field");
  common(respond, o);
  respond->add_option("--mode", o.mode)->check(CLI::IsMember({"apply", "invert", "linear"}));
  respond->add_option("--input", o.input, "field base path (<base>.bin with <base>.json)");

  auto* simulate = app.add_subcommand("simulate", "evolve a perturbation; trajectory, scattering report");
  common(simulate, o);
  simulate->add_option("--scheme", o.scheme)->check(CLI::IsMember({"direct", "fixedpoint"}));

  auto* verify = app.add_subcommand("verify", "numerical checks of the estimates");
  common(verify, o);
  verify->add_option("--suite", o.suite)->check(CLI::IsMember({"strichartz", "hs", "weights"}));
  verify->add_flag("--probe-sharpness", o.probe, "allow non-admissible exponents");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  CLI::App* sub = app.get_subcommands().front();
  RunFlags f;
  f.argv.assign(argv, argv + argc);
  f.out = o.out;
  f.threads = o.threads;
  f.force = o.force;
  if (sub->count("--seed")) f.seed = o.seed;
  if (sub == disp) {
    if (disp->count("--tau")) f.tau = o.tau;
    if (disp->count("--omega-min")) f.omega_min = o.omega_min;
    if (disp->count("--omega-max")) f.omega_max = o.omega_max;
    if (disp->count("--xi")) f.xi = o.xi;
    if (disp->count("--steps")) f.steps = o.steps;
  }
  if (!o.scheme.empty()) f.scheme = o.scheme;
  if (!o.mode.empty()) f.mode = o.mode;
  if (!o.suite.empty()) f.suite = o.suite;
  if (!o.input.empty()) f.input = o.input;
  f.probe_sharpness = o.probe;

  ExperimentConfig cfg;
  try {
    cfg = o.config.empty() ? parse_config(nlohmann::json::object()) : parse_config_file(o.config);
  } catch (const SchemaError& e) {
    std::cerr << "invalid configuration:\n";
    for (const auto& v : e.violations) std::cerr << "  " << (v.pointer.empty() ? "/" : v.pointer) << ": " << v.message << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return 1;
  }

  const RunResult r = run(sub->get_name(), cfg, f);
  if (r.exit_code != 0) {
    std::cerr << sub->get_name() << " failed (exit " << r.exit_code << "): " << r.error << '\n';
  } else {
    std::cout << r.out_dir.string() << '\n';
    for (const auto& a : r.artifacts) std::cout << "  " << a << '\n';
  }
  return r.exit_code;
}
