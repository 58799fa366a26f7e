#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hartree/dynamics.hpp"
#include "hartree/spectral.hpp"

namespace hartree {

namespace fs = std::filesystem;

// Binary artifacts are raw little-endian f64, complex values interleaved
// (re, im), with a JSON sidecar at <base>.json next to <base>.bin.

void write_state(const fs::path& base, const DensityMatrixState& s);
DensityMatrixState read_state(const fs::path& base);

void write_field(const fs::path& base, const SpaceTimeField& f);
SpaceTimeField read_field(const fs::path& base);

void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

// FNV-1a over the bytes; stable across platforms, used for config hashes.
std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t x);

struct RunInfo {
  std::string subcommand;
  nlohmann::json config;  // fully resolved, defaults filled
  std::uint64_t seed = 0;
  int threads = 1;
  double wall_seconds = 0.0;
  std::vector<std::string> argv;
  std::vector<std::string> artifacts;
  int exit_code = 0;
  std::string error;
};

// manifest.json: config and its hash, seed, thread count, library versions,
// wall time, the artifact list and the command line.
void write_manifest(const fs::path& dir, const RunInfo& info);

// <dir>/ledger.csv, <dir>/rho.{bin,json}, <dir>/snapshots/step_NNNNNN.{bin,json}
// and <dir>/trajectory.json indexing them.
std::vector<std::string> write_trajectory(const fs::path& dir, const Trajectory& tr);

std::string library_versions();

}  // namespace hartree
