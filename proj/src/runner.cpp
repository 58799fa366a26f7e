#include "hartree/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <sstream>
#include <thread>

#include "hartree/dispersion.hpp"
#include "hartree/dynamics.hpp"
#include "hartree/errors.hpp"
#include "hartree/io.hpp"
#include "hartree/response.hpp"
#include "hartree/solver.hpp"
#include "hartree/verify.hpp"

namespace hartree {

namespace {

using nlohmann::json;

// shortest round-trip text, so reruns compare byte for byte
std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct Context {
  ExperimentConfig cfg;
  RunFlags flags;
  fs::path dir;
  Executor ex{1};
  std::vector<std::string> artifacts;

  void text(const std::string& name, const std::string& body) {
    write_text(dir / name, body);
    artifacts.push_back(name);
  }
};

std::string convergence_csv(const std::vector<double>& residuals, const std::vector<double>& factors) {
  std::ostringstream os;
  os << "iter,residual,factor\n";
  for (std::size_t i = 0; i < residuals.size(); ++i)
    os << i << ',' << num(residuals[i]) << ',' << (i >= 1 && i - 1 < factors.size() ? num(factors[i - 1]) : "") << '\n';
  return os.str();
}

// ---------------------------------------------------------------- penrose

void run_penrose(Context& c) {
  const auto p = c.cfg.make_profile();
  const auto w = c.cfg.make_potential();
  ScanConfig scan = c.cfg.scan;
  scan.force = c.flags.force;
  scan.keep_grid = true;
  const auto rep = penrose_margin(p, w, scan, c.ex);
  c.text("report.json", rep.to_json());
  std::ostringstream os;
  os << "tau,omega,xi,re,im,abs\n";
  for (const auto& s : rep.grid)
    os << num(s.tau) << ',' << num(s.omega) << ',' << num(s.xi) << ',' << num(s.penrose_value.real()) << ','
       << num(s.penrose_value.imag()) << ',' << num(std::abs(s.penrose_value)) << '\n';
  c.text("scan.csv", os.str());
  c.text("sufficiency.json", penrose_sufficient_check(p, w).to_json());
}

// ---------------------------------------------------------------- dispersion

void run_dispersion(Context& c) {
  auto D = c.cfg.dispersion;
  const auto& f = c.flags;
  if (f.tau) D.tau = *f.tau;
  if (f.omega_min) D.omega_min = *f.omega_min;
  if (f.omega_max) D.omega_max = *f.omega_max;
  if (f.xi) D.xi = *f.xi;
  if (f.steps) D.steps = *f.steps;
  if (!(D.xi > 0) || D.tau < 0 || !(D.omega_max > D.omega_min) || D.steps < 2)
    throw InvalidArgument("dispersion needs xi > 0, tau >= 0, omega_max > omega_min and steps >= 2");
  const auto p = c.cfg.make_profile();
  const auto w = c.cfg.make_potential();
  const double wk = w.fourier_radial(D.xi);
  std::vector<cplx> M(static_cast<std::size_t>(D.steps));
  std::vector<double> om(M.size());
  for (std::size_t i = 0; i < M.size(); ++i)
    om[i] = D.omega_min + (D.omega_max - D.omega_min) * static_cast<double>(i) / static_cast<double>(D.steps - 1);
  c.ex.for_each(M.size(), [&](std::size_t i) { M[i] = dispersion_m(p, D.tau, om[i], D.xi); });

  std::ostringstream os;
  os << "tau,omega,xi,re_m,im_m,re,im,abs\n";
  std::size_t best = 0;
  for (std::size_t i = 0; i < M.size(); ++i) {
    const cplx v = 1.0 + 2.0 * wk * M[i];
    if (std::abs(v) < std::abs(1.0 + 2.0 * wk * M[best])) best = i;
    os << num(D.tau) << ',' << num(om[i]) << ',' << num(D.xi) << ',' << num(M[i].real()) << ',' << num(M[i].imag())
       << ',' << num(v.real()) << ',' << num(v.imag()) << ',' << num(std::abs(v)) << '\n';
  }
  c.text("dispersion.csv", os.str());
  if (!D.root) return;
  json j{{"xi", D.xi}, {"start", {{"tau", std::max(D.tau, 0.05)}, {"omega", om[best]}}}};
  try {
    const Root r = dispersion_root(p, w, D.xi, std::max(D.tau, 0.05), om[best]);
    j["found"] = true;
    j["tau"] = r.tau;
    j["omega"] = r.omega;
    j["residual"] = r.residual;
    j["iterations"] = r.iterations;
    j["growing"] = r.tau > 0;
  } catch (const NoRoot& e) {
    j["found"] = false;
    j["reason"] = e.what();
  } catch (const JacobianSingular& e) {
    j["found"] = false;
    j["reason"] = e.what();
  }
  c.text("root.json", j.dump(2));
}

// ---------------------------------------------------------------- respond

void run_respond(Context& c) {
  auto R = c.cfg.respond;
  if (c.flags.mode) R.mode = *c.flags.mode;
  if (c.flags.input) R.input = *c.flags.input;
  if (R.mode != "apply" && R.mode != "invert" && R.mode != "linear")
    throw InvalidArgument("--mode must be apply, invert or linear");
  const auto k = c.cfg.make_kernel(R.kernel, R.rule);
  std::vector<std::string> warnings;
  SpaceTimeField out;
  if (R.mode == "linear") {
    out = linear_solve(c.cfg.make_initial(), k, c.cfg.time_grid(), c.ex, &warnings);
  } else {
    if (R.input.empty()) throw InvalidArgument("respond --mode " + R.mode + " needs an input field (--input)");
    fs::path in = c.flags.input ? fs::path(R.input) : fs::path(c.cfg.resolve(R.input));
    if (in.extension() == ".bin" || in.extension() == ".json") in.replace_extension();
    const auto f = read_field(in);
    if (f.grid().dim() != c.cfg.dimension) throw DimensionError("input field dimension differs from the config");
    out = R.mode == "apply" ? apply_response(k, f, c.ex) : invert_response(k, f, c.ex, &warnings);
  }
  write_field(c.dir / "response", out);
  c.artifacts.push_back("response.bin");
  c.artifacts.push_back("response.json");
  c.text("warnings.json", json(warnings).dump(2));
}

// ---------------------------------------------------------------- simulate

void run_simulate(Context& c) {
  auto S = c.cfg.solver;
  if (c.flags.scheme) S.scheme = *c.flags.scheme;
  if (S.scheme != "direct" && S.scheme != "fixedpoint") throw InvalidArgument("--scheme must be direct or fixedpoint");
  const auto Q_in = c.cfg.make_initial();
  const auto g = c.cfg.make_profile();
  const auto w = c.cfg.make_potential();
  const TimeGrid tg = c.cfg.time_grid();
  PropagateOptions opt;
  opt.store_stride = c.cfg.time.store_stride;
  opt.breach_tol = S.breach_tol;
  opt.hs_index = S.s.value_or(default_sobolev_index(c.cfg.dimension));

  Trajectory traj;
  json summary{{"scheme", S.scheme}};
  if (S.scheme == "direct") {
    auto r = solve_direct(Q_in, g, w, tg, opt);
    traj = std::move(r.trajectory);
    summary["input_norm"] = r.input_norm;
    summary["s"] = r.s;
    c.text("convergence.csv", convergence_csv({}, {}));
  } else {
    FixedPointConfig fp;
    fp.tol = S.tol;
    fp.max_iter = S.max_iter;
    fp.damping = S.damping;
    fp.s = S.s;
    const auto k = c.cfg.make_kernel(S.kernel, S.rule);
    FixedPointResult r;
    try {
      r = solve_fixed_point(Q_in, k, tg, fp, c.ex);
    } catch (const NotConverged& e) {
      c.text("convergence.csv", convergence_csv(e.residuals, e.factors));
      throw;
    }
    c.text("convergence.csv", convergence_csv(r.residuals, r.factors));
    write_field(c.dir / "rho_fixed_point", r.rho);
    c.artifacts.push_back("rho_fixed_point.bin");
    c.artifacts.push_back("rho_fixed_point.json");
    // the trajectory of Q_in under the potential of the fixed point
    traj = propagate_UV(Q_in, convolve_potential(w, r.rho).V, &g, opt);
    traj.notes.insert(traj.notes.end(), r.notes.begin(), r.notes.end());
    summary["iterations"] = r.iterations;
    summary["s"] = r.s;
    summary["input_norm"] = input_norm(Q_in, r.s);
  }
  for (auto& a : write_trajectory(c.dir / "trajectory", traj)) c.artifacts.push_back("trajectory/" + a);
  const double t0 = S.window_start.value_or(0.0);
  const double t1 = S.window_end.value_or(tg.t_final());
  const auto sc = scattering_diagnostic(traj, t0, t1);
  c.text("scattering.json", sc.to_json());
  summary["notes"] = traj.notes;
  summary["verdict"] = sc.verdict;
  c.text("summary.json", summary.dump(2));
}

// ---------------------------------------------------------------- verify

StrichartzParams strichartz_point(const ExperimentConfig& cfg) {
  const auto& S = cfg.verify.strichartz;
  StrichartzParams prm;
  prm.d = cfg.dimension;
  // defaults: an admissible point in each dimension
  const bool defaults = !S.p && !S.q && S.sigma1 == 0.0 && S.sigma2 == 0.0;
  prm.p = S.p.value_or(cfg.dimension == 1 ? 4.0 : 2.0);
  prm.q = S.q.value_or(2.0);
  prm.alpha = S.alpha.value_or(cfg.dimension == 1 ? 4.0 / 3.0 : 2.0 * cfg.dimension / (cfg.dimension + 1.0));
  prm.sigma1 = S.sigma1;
  prm.sigma2 = S.sigma2;
  if (defaults && cfg.dimension == 3) prm.sigma1 = prm.sigma2 = 0.25;
  return prm;
}

void run_verify(Context& c) {
  const std::string suite = c.flags.suite.value_or(c.cfg.verify.suite);
  const TorusGrid G = c.cfg.torus();
  if (suite == "strichartz") {
    const auto& S = c.cfg.verify.strichartz;
    const auto prm = strichartz_point(c.cfg);
    StrichartzWindow win;
    win.t_final = S.t_final;
    win.n_steps = S.n_steps;
    const bool probe = S.probe_sharpness || c.flags.probe_sharpness;
    json j;
    if (S.ladder) {
      const auto L = strichartz_ladder(G, win, prm, S.samples, c.cfg.seed, probe, c.ex);
      j = json::parse(L.to_json());
      c.text("strichartz_ratios.csv", L.coarse.ratios_csv());
      c.text("strichartz_ratios_fine.csv", L.fine.ratios_csv());
    } else {
      const auto E = strichartz_sample(G, win, prm, S.samples, c.cfg.seed, probe, c.ex);
      j = json::parse(E.to_json());
      c.text("strichartz_ratios.csv", E.ratios_csv());
    }
    c.text("strichartz.json", j.dump(2));
  } else if (suite == "hs") {
    const auto& H = c.cfg.verify.hs;
    std::mt19937_64 rng(c.cfg.seed);
    std::normal_distribution<double> nd;
    json runs = json::array();
    std::ostringstream os;
    os << "sample,lhs,rhs,rel_err\n";
    double worst = 0;
    for (int i = 0; i < H.samples; ++i) {
      SpaceTimeField V(TimeGrid(H.n_steps, H.dt), G, false);
      for (auto& x : V.data()) x = cd(nd(rng), nd(rng));
      const auto h = hs_identity_check(V, H.alpha1, H.alpha2);
      worst = std::max(worst, h.rel_err);
      runs.push_back(json::parse(h.to_json()));
      os << i << ',' << num(h.lhs) << ',' << num(h.rhs) << ',' << num(h.rel_err) << '\n';
    }
    c.text("hs.json", json{{"alpha1", H.alpha1}, {"alpha2", H.alpha2}, {"dt", H.dt}, {"n_steps", H.n_steps},
                           {"max_rel_err", worst}, {"samples", runs}}
                          .dump(2));
    c.text("hs_ratios.csv", os.str());
  } else if (suite == "weights") {
    const auto& W = c.cfg.verify.weights;
    const auto rep = weight_sum_bound(c.cfg.dimension, W.alpha1, W.alpha2, W.rho, W.r, W.epsilon);
    c.text("weights.json", rep.to_json());
    std::ostringstream os;
    os << "r,row_max\n";
    for (std::size_t i = 0; i < rep.r_grid.size() && i < rep.row_max.size(); ++i)
      os << num(rep.r_grid[i]) << ',' << num(rep.row_max[i]) << '\n';
    c.text("weights.csv", os.str());
  } else {
    throw InvalidArgument("--suite must be strichartz, hs or weights");
  }
}

fs::path output_dir(const ExperimentConfig& cfg, const RunFlags& f, const std::string& sub) {
  if (!f.out.empty()) return f.out;
  if (const char* env = std::getenv("HARTREE_OUT_DIR"); env && *env) return fs::path(env) / sub;
  return fs::path(cfg.output.dir) / sub;
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> s{"penrose", "dispersion", "respond", "simulate", "verify"};
  return s;
}

RunResult run(const std::string& subcommand, ExperimentConfig cfg, const RunFlags& flags) {
  const auto start = std::chrono::steady_clock::now();
  RunResult res;
  if (flags.seed) cfg.seed = *flags.seed;
  Context c{cfg, flags, output_dir(cfg, flags, subcommand), Executor(1), {}};
  const int threads = flags.threads > 0 ? flags.threads : std::max(1u, std::thread::hardware_concurrency());
  c.ex = Executor(threads);
  res.out_dir = c.dir;

  RunInfo info;
  info.subcommand = subcommand;
  info.config = cfg.to_json();
  info.seed = cfg.seed;
  info.threads = threads;
  info.argv = flags.argv;

  // never clobber an earlier run's manifest unless asked
  const bool refused = fs::exists(c.dir / "manifest.json") && !flags.force;
  try {
    if (refused) throw IoError(c.dir.string() + " already holds a run; pass --force to overwrite");
    fs::create_directories(c.dir);
    if (subcommand == "penrose") run_penrose(c);
    else if (subcommand == "dispersion") run_dispersion(c);
    else if (subcommand == "respond") run_respond(c);
    else if (subcommand == "simulate") run_simulate(c);
    else if (subcommand == "verify") run_verify(c);
    else throw InvalidArgument("unknown subcommand '" + subcommand + "'");
  } catch (const NotConverged& e) {
    res.exit_code = 2;
    res.error = e.what();
  } catch (const DiagnosticBreach& e) {
    res.exit_code = 3;
    res.error = e.what();
    try {
      c.text("ledger.csv", e.ledger);
    } catch (const std::exception&) {
    }
  } catch (const std::exception& e) {
    res.exit_code = 1;
    res.error = e.what();
  }
  res.artifacts = c.artifacts;
  info.artifacts = c.artifacts;
  info.exit_code = res.exit_code;
  info.error = res.error;
  info.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  try {
    if (!refused && fs::is_directory(c.dir)) write_manifest(c.dir, info);
  } catch (const std::exception&) {
  }
  return res;
}

}  // namespace hartree
