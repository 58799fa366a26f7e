#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hartree/config.hpp"

namespace hartree {

// Command-line overrides on top of the config file.
struct RunFlags {
  std::string out;  // empty: HARTREE_OUT_DIR, then config output.dir
  int threads = 0;  // 0: hardware concurrency
  std::optional<std::uint64_t> seed;
  bool force = false;
  // dispersion
  std::optional<double> tau, omega_min, omega_max, xi;
  std::optional<int> steps;
  // simulate / respond / verify
  std::optional<std::string> scheme, mode, suite, input;
  bool probe_sharpness = false;
  std::vector<std::string> argv;
};

struct RunResult {
  int exit_code = 0;
  std::filesystem::path out_dir;
  std::vector<std::string> artifacts;
  std::string error;
};

// Exit codes: 0 success, 2 NotConverged, 3 DiagnosticBreach, 1 anything else.
// A manifest.json is written in the output directory in every case where the
// directory could be created.
RunResult run(const std::string& subcommand, ExperimentConfig cfg, const RunFlags& flags);

// penrose | dispersion | respond | simulate | verify
const std::vector<std::string>& subcommands();

}  // namespace hartree
