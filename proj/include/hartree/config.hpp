#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hartree/dispersion.hpp"
#include "hartree/profiles.hpp"
#include "hartree/response.hpp"
#include "hartree/spectral.hpp"

namespace hartree {

struct GridSpec {
  int n = 32;
  double length = 40.0;
};

struct TimeSpec {
  double dt = 0.05, t_final = 20.0;
  int store_stride = 1;
  int n_steps() const;
};

struct ProfileSpec {
  std::string family = "gaussian";  // gaussian | fermi_dirac | two_stream | ball | tabulated
  double beta = 1.0, mu = 1.0, v0 = 1.0, amplitude = 1.0;
  std::string path;
};

struct PotentialSpec {
  std::string family = "delta";  // delta | gaussian | yukawa
  double c = 1.0, width = 1.0, mass = 1.0;
};

struct InitialSpec {
  std::string kind = "rank1";  // rank1 | random | file
  double amplitude = 1e-2;     // trace of Q_in
  double width = 0.5;          // envelope exp(-width |k|^2) on the coefficients
  double shift = 0.0;          // position of the packet along the first axis
  int rank = 4;
  std::optional<std::uint64_t> seed;
  std::string path;
};

struct SolverSpec {
  std::string scheme = "direct";  // direct | fixedpoint
  std::optional<double> s;
  double tol = 1e-10;
  int max_iter = 30;
  double damping = 1.0;
  std::string kernel = "lattice";   // lattice | continuum
  std::string rule = "split_step";  // split_step | trapezoid
  std::optional<double> window_start, window_end;
  double breach_tol = 1e-8;  // trace drift and Hermiticity defect allowed per run
};

struct DispersionSpec {
  double xi = 1.0, tau = 0.0, omega_min = -5.0, omega_max = 5.0;
  int steps = 101;
  bool root = true;
};

struct RespondSpec {
  std::string mode = "apply";  // apply | invert | linear
  std::string input;
  std::string kernel = "continuum";
  std::string rule = "trapezoid";
};

struct StrichartzSpec {
  std::optional<double> p, q, alpha;
  double sigma1 = 0.0, sigma2 = 0.0;
  int samples = 50;
  double t_final = 1.0;
  int n_steps = 0;
  bool ladder = true;
  bool probe_sharpness = false;
};

struct HsSpec {
  double alpha1 = 0.5, alpha2 = 0.5, dt = 0.1;
  int samples = 10, n_steps = 8;
};

struct WeightsSpec {
  double alpha1 = 0.6, alpha2 = 0.6, epsilon = 0.05;
  std::vector<double> rho{0.0, 0.1, 1.0, 10.0, 100.0, 1000.0};
  std::vector<double> r{0.01, 0.1, 1.0, 10.0, 100.0, 1000.0};
};

struct VerifySpec {
  std::string suite = "strichartz";  // strichartz | hs | weights
  StrichartzSpec strichartz;
  HsSpec hs;
  WeightsSpec weights;
};

struct OutputSpec {
  std::string dir = "out";
  std::vector<std::string> formats{"json", "csv", "bin"};
};

struct ExperimentConfig {
  int dimension = 1;
  std::uint64_t seed = 1;
  GridSpec grid;
  TimeSpec time;
  ProfileSpec profile;
  PotentialSpec potential;
  InitialSpec initial;
  SolverSpec solver;
  ScanConfig scan;
  DispersionSpec dispersion;
  RespondSpec respond;
  VerifySpec verify;
  OutputSpec output;
  std::string base_dir;  // directory of the config file, for relative paths

  nlohmann::json to_json() const;  // fully resolved
  TorusGrid torus() const;
  TimeGrid time_grid() const;
  VelocityProfile make_profile() const;
  InteractionPotential make_potential() const;
  DensityMatrixState make_initial() const;  // on the operator grid
  ResponseKernel make_kernel(const std::string& kernel, const std::string& rule) const;
  std::string resolve(const std::string& path) const;
};

// Every violation is collected; SchemaError lists them with JSON pointers.
ExperimentConfig parse_config(const nlohmann::json& j, const std::string& base_dir = ".");
ExperimentConfig parse_config_file(const std::string& path);

}  // namespace hartree
