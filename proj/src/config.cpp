#include "hartree/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "hartree/errors.hpp"
#include "hartree/io.hpp"

namespace hartree {

namespace {

using nlohmann::json;

// Walks one object, records violations and rejects keys nobody asked for.
class Reader {
 public:
  Reader(const json& j, std::string ptr, std::vector<SchemaViolation>& out) : j_(j), ptr_(std::move(ptr)), out_(out) {
    if (!j_.is_object()) fail("", "must be an object");
  }
  ~Reader() {
    if (!j_.is_object()) return;
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) out_.push_back({ptr_ + "/" + k, "unknown key '" + k + "'"});
  }

  const json* get(const std::string& k) {
    seen_.insert(k);
    if (!j_.is_object() || !j_.contains(k) || j_.at(k).is_null()) return nullptr;
    return &j_.at(k);
  }
  std::string at(const std::string& k) const { return ptr_ + "/" + k; }
  void fail(const std::string& k, const std::string& msg) { out_.push_back({k.empty() ? ptr_ : at(k), msg}); }

  void number(const std::string& k, double& x, bool positive = false, bool nonneg = false) {
    if (const json* v = get(k)) {
      if (!v->is_number()) return fail(k, "must be a number");
      x = v->get<double>();
    }
    check(k, x, positive, nonneg);
  }
  void number(const std::string& k, std::optional<double>& x, bool positive = false) {
    if (const json* v = get(k)) {
      if (!v->is_number()) return fail(k, "must be a number");
      x = v->get<double>();
      check(k, *x, positive, false);
    }
  }
  void integer(const std::string& k, int& x, int lo) {
    if (const json* v = get(k)) {
      if (!v->is_number_integer()) return fail(k, "must be an integer");
      x = v->get<int>();
    }
    if (x < lo) fail(k, "must be >= " + std::to_string(lo));
  }
  void seed(const std::string& k, std::uint64_t& x) {
    if (const json* v = get(k)) {
      if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0))
        return fail(k, "must be a nonnegative integer");
      x = v->get<std::uint64_t>();
    }
  }
  void flag(const std::string& k, bool& x) {
    if (const json* v = get(k)) {
      if (!v->is_boolean()) return fail(k, "must be a boolean");
      x = v->get<bool>();
    }
  }
  void text(const std::string& k, std::string& x) {
    if (const json* v = get(k)) {
      if (!v->is_string()) return fail(k, "must be a string");
      x = v->get<std::string>();
    }
  }
  void choice(const std::string& k, std::string& x, std::initializer_list<const char*> allowed) {
    text(k, x);
    for (const char* a : allowed)
      if (x == a) return;
    std::string msg = "must be one of";
    for (const char* a : allowed) msg += std::string(" ") + a;
    fail(k, msg);
  }
  void numbers(const std::string& k, std::vector<double>& x, bool nonneg) {
    if (const json* v = get(k)) {
      if (!v->is_array() || v->empty()) return fail(k, "must be a non-empty array of numbers");
      std::vector<double> r;
      for (std::size_t i = 0; i < v->size(); ++i) {
        if (!(*v)[i].is_number()) return fail(k, "element " + std::to_string(i) + " must be a number");
        r.push_back((*v)[i].get<double>());
        if (nonneg && r.back() < 0) return fail(k, "elements must be nonnegative");
      }
      x = std::move(r);
    }
  }
  const json* object(const std::string& k) {
    const json* v = get(k);
    if (v && !v->is_object()) {
      fail(k, "must be an object");
      return nullptr;
    }
    return v;
  }

 private:
  void check(const std::string& k, double x, bool positive, bool nonneg) {
    if (!std::isfinite(x)) return fail(k, "must be finite");
    if (positive && !(x > 0)) fail(k, "must be > 0");
    if (nonneg && x < 0) fail(k, "must be >= 0");
  }
  const json& j_;
  std::string ptr_;
  std::vector<SchemaViolation>& out_;
  std::set<std::string> seen_;
};

const json kEmpty = json::object();

const json& sub(Reader& r, const std::string& k) {
  const json* v = r.object(k);
  return v ? *v : kEmpty;
}

json opt(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

}  // namespace

int TimeSpec::n_steps() const { return static_cast<int>(std::lround(t_final / dt)); }

ExperimentConfig parse_config(const json& j, const std::string& base_dir) {
  std::vector<SchemaViolation> bad;
  ExperimentConfig c;
  c.base_dir = base_dir;
  {
    Reader r(j, "", bad);
    if (const json* v = r.get("dimension")) {
      if (!v->is_number_integer() || v->get<int>() < 1 || v->get<int>() > 3)
        r.fail("dimension", "must be 1, 2 or 3");
      else
        c.dimension = v->get<int>();
    }
    r.seed("seed", c.seed);
    {
      Reader g(sub(r, "grid"), "/grid", bad);
      g.integer("n", c.grid.n, 4);
      if (c.grid.n % 2) g.fail("n", "must be even");
      g.number("length", c.grid.length, true);
    }
    {
      Reader t(sub(r, "time"), "/time", bad);
      t.number("dt", c.time.dt, true);
      t.number("t_final", c.time.t_final, true);
      t.integer("store_stride", c.time.store_stride, 1);
      if (c.time.dt > 0 && c.time.t_final > 0) {
        const double n = c.time.t_final / c.time.dt;
        if (std::abs(n - std::round(n)) > 1e-6 * n) t.fail("t_final", "must be a whole number of steps dt");
        else if (std::lround(n) < 2) t.fail("t_final", "must span at least two steps");
      }
    }
    {
      Reader p(sub(r, "profile"), "/profile", bad);
      p.choice("family", c.profile.family, {"gaussian", "fermi_dirac", "two_stream", "ball", "tabulated"});
      p.number("beta", c.profile.beta, true);
      p.number("mu", c.profile.mu, c.profile.family == "ball");
      p.number("v0", c.profile.v0, false, true);
      p.number("amplitude", c.profile.amplitude, false, true);
      p.text("path", c.profile.path);
      if (c.profile.family == "tabulated" && c.profile.path.empty()) p.fail("path", "required for tabulated profiles");
    }
    {
      Reader p(sub(r, "potential"), "/potential", bad);
      p.choice("family", c.potential.family, {"delta", "gaussian", "yukawa"});
      p.number("c", c.potential.c);
      p.number("width", c.potential.width, true);
      p.number("mass", c.potential.mass, true);
    }
    {
      Reader p(sub(r, "initial"), "/initial", bad);
      p.choice("kind", c.initial.kind, {"rank1", "random", "file"});
      p.number("amplitude", c.initial.amplitude, false, true);
      p.number("width", c.initial.width, true);
      p.number("shift", c.initial.shift);
      p.integer("rank", c.initial.rank, 1);
      if (p.get("seed")) {
        std::uint64_t s = 0;
        p.seed("seed", s);
        c.initial.seed = s;
      }
      p.text("path", c.initial.path);
      if (c.initial.kind == "file" && c.initial.path.empty()) p.fail("path", "required when kind is file");
    }
    {
      Reader s(sub(r, "solver"), "/solver", bad);
      s.choice("scheme", c.solver.scheme, {"direct", "fixedpoint"});
      s.number("s", c.solver.s);
      s.number("tol", c.solver.tol, true);
      s.integer("max_iter", c.solver.max_iter, 1);
      s.number("damping", c.solver.damping, true);
      if (c.solver.damping > 1) s.fail("damping", "must be <= 1");
      s.choice("kernel", c.solver.kernel, {"lattice", "continuum"});
      s.choice("rule", c.solver.rule, {"split_step", "trapezoid"});
      s.number("breach_tol", c.solver.breach_tol, true);
      if (const json* w = s.get("window")) {
        if (!w->is_array() || w->size() != 2 || !(*w)[0].is_number() || !(*w)[1].is_number())
          s.fail("window", "must be [t0, t1]");
        else if (!((*w)[1].get<double>() > (*w)[0].get<double>()))
          s.fail("window", "needs t1 > t0");
        else {
          c.solver.window_start = (*w)[0].get<double>();
          c.solver.window_end = (*w)[1].get<double>();
        }
      }
    }
    {
      Reader s(sub(r, "scan"), "/scan", bad);
      s.integer("n_tau", c.scan.n_tau, 2);
      s.number("tau_min", c.scan.tau_min, true);
      s.number("tau_max", c.scan.tau_max, true);
      s.integer("n_omega", c.scan.n_omega, 3);
      if (c.scan.n_omega % 2 == 0) s.fail("n_omega", "must be odd");
      s.integer("n_xi", c.scan.n_xi, 2);
      s.number("xi_max", c.scan.xi_max, false, true);
      s.number("omega_scale", c.scan.omega_scale, true);
      s.number("tail_target", c.scan.tail_target, true);
      s.number("rel_tol", c.scan.rel_tol, true);
      s.integer("max_refinements", c.scan.max_refinements, 0);
      s.number("threshold", c.scan.threshold, true);
      if (c.scan.tau_max <= c.scan.tau_min) s.fail("tau_max", "must exceed tau_min");
    }
    {
      Reader s(sub(r, "dispersion"), "/dispersion", bad);
      s.number("xi", c.dispersion.xi, true);
      s.number("tau", c.dispersion.tau, false, true);
      s.number("omega_min", c.dispersion.omega_min);
      s.number("omega_max", c.dispersion.omega_max);
      s.integer("steps", c.dispersion.steps, 2);
      s.flag("root", c.dispersion.root);
      if (!(c.dispersion.omega_max > c.dispersion.omega_min)) s.fail("omega_max", "must exceed omega_min");
    }
    {
      Reader s(sub(r, "respond"), "/respond", bad);
      s.choice("mode", c.respond.mode, {"apply", "invert", "linear"});
      s.text("input", c.respond.input);
      s.choice("kernel", c.respond.kernel, {"lattice", "continuum"});
      s.choice("rule", c.respond.rule, {"split_step", "trapezoid"});
    }
    {
      Reader v(sub(r, "verify"), "/verify", bad);
      v.choice("suite", c.verify.suite, {"strichartz", "hs", "weights"});
      {
        Reader s(sub(v, "strichartz"), "/verify/strichartz", bad);
        auto& S = c.verify.strichartz;
        s.number("p", S.p, true);
        s.number("q", S.q, true);
        s.number("alpha", S.alpha, true);
        s.number("sigma1", S.sigma1, false, true);
        s.number("sigma2", S.sigma2, false, true);
        s.integer("samples", S.samples, 1);
        s.number("t_final", S.t_final, true);
        s.integer("n_steps", S.n_steps, 0);
        s.flag("ladder", S.ladder);
        s.flag("probe_sharpness", S.probe_sharpness);
      }
      {
        Reader s(sub(v, "hs"), "/verify/hs", bad);
        auto& H = c.verify.hs;
        s.number("alpha1", H.alpha1, false, true);
        s.number("alpha2", H.alpha2, false, true);
        s.number("dt", H.dt, true);
        s.integer("samples", H.samples, 1);
        s.integer("n_steps", H.n_steps, 2);
      }
      {
        Reader s(sub(v, "weights"), "/verify/weights", bad);
        auto& W = c.verify.weights;
        s.number("alpha1", W.alpha1, false, true);
        s.number("alpha2", W.alpha2, false, true);
        s.number("epsilon", W.epsilon, true);
        s.numbers("rho", W.rho, true);
        s.numbers("r", W.r, true);
        for (double x : W.r)
          if (!(x > 0)) s.fail("r", "elements must be > 0");
      }
    }
    {
      Reader o(sub(r, "output"), "/output", bad);
      o.text("dir", c.output.dir);
      if (const json* f = o.get("formats")) {
        if (!f->is_array()) {
          o.fail("formats", "must be an array");
        } else {
          c.output.formats.clear();
          for (const auto& x : *f) {
            const std::string s = x.is_string() ? x.get<std::string>() : "";
            if (s != "json" && s != "csv" && s != "bin") o.fail("formats", "entries must be json, csv or bin");
            else c.output.formats.push_back(s);
          }
        }
      }
    }
  }
  if (!bad.empty()) throw SchemaError(std::move(bad));
  return c;
}

ExperimentConfig parse_config_file(const std::string& path) {
  if (!std::filesystem::exists(path)) throw IoError("config file not found: " + path);
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw SchemaError({{"", std::string("not valid JSON: ") + e.what()}});
  }
  auto dir = std::filesystem::path(path).parent_path();
  return parse_config(j, dir.empty() ? "." : dir.string());
}

json ExperimentConfig::to_json() const {
  json j;
  j["dimension"] = dimension;
  j["seed"] = seed;
  j["grid"] = {{"n", grid.n}, {"length", grid.length}};
  j["time"] = {{"dt", time.dt}, {"t_final", time.t_final}, {"store_stride", time.store_stride}};
  j["profile"] = {{"family", profile.family}, {"beta", profile.beta}, {"mu", profile.mu},
                  {"v0", profile.v0},         {"amplitude", profile.amplitude}, {"path", profile.path}};
  j["potential"] = {{"family", potential.family}, {"c", potential.c}, {"width", potential.width},
                    {"mass", potential.mass}};
  j["initial"] = {{"kind", initial.kind},   {"amplitude", initial.amplitude}, {"width", initial.width},
                  {"shift", initial.shift}, {"rank", initial.rank},           {"path", initial.path}};
  j["initial"]["seed"] = initial.seed ? json(*initial.seed) : json(nullptr);
  j["solver"] = {{"scheme", solver.scheme}, {"s", opt(solver.s)},           {"tol", solver.tol},
                 {"max_iter", solver.max_iter}, {"damping", solver.damping}, {"kernel", solver.kernel},
                 {"rule", solver.rule},         {"breach_tol", solver.breach_tol}};
  j["solver"]["window"] =
      solver.window_start ? json::array({*solver.window_start, *solver.window_end}) : json(nullptr);
  j["scan"] = {{"n_tau", scan.n_tau},         {"tau_min", scan.tau_min},
               {"tau_max", scan.tau_max},     {"n_omega", scan.n_omega},
               {"n_xi", scan.n_xi},           {"xi_max", scan.xi_max},
               {"omega_scale", scan.omega_scale}, {"tail_target", scan.tail_target},
               {"rel_tol", scan.rel_tol},     {"max_refinements", scan.max_refinements},
               {"threshold", scan.threshold}};
  j["dispersion"] = {{"xi", dispersion.xi},           {"tau", dispersion.tau},     {"omega_min", dispersion.omega_min},
                     {"omega_max", dispersion.omega_max}, {"steps", dispersion.steps}, {"root", dispersion.root}};
  j["respond"] = {{"mode", respond.mode}, {"input", respond.input}, {"kernel", respond.kernel}, {"rule", respond.rule}};
  const auto& S = verify.strichartz;
  j["verify"] = {{"suite", verify.suite},
                 {"strichartz",
                  {{"p", opt(S.p)},
                   {"q", opt(S.q)},
                   {"alpha", opt(S.alpha)},
                   {"sigma1", S.sigma1},
                   {"sigma2", S.sigma2},
                   {"samples", S.samples},
                   {"t_final", S.t_final},
                   {"n_steps", S.n_steps},
                   {"ladder", S.ladder},
                   {"probe_sharpness", S.probe_sharpness}}},
                 {"hs",
                  {{"alpha1", verify.hs.alpha1},
                   {"alpha2", verify.hs.alpha2},
                   {"dt", verify.hs.dt},
                   {"samples", verify.hs.samples},
                   {"n_steps", verify.hs.n_steps}}},
                 {"weights",
                  {{"alpha1", verify.weights.alpha1},
                   {"alpha2", verify.weights.alpha2},
                   {"epsilon", verify.weights.epsilon},
                   {"rho", verify.weights.rho},
                   {"r", verify.weights.r}}}};
  j["output"] = {{"dir", output.dir}, {"formats", output.formats}};
  return j;
}

TorusGrid ExperimentConfig::torus() const { return TorusGrid(dimension, grid.n, grid.length); }

TimeGrid ExperimentConfig::time_grid() const { return TimeGrid(time.n_steps(), time.dt); }

std::string ExperimentConfig::resolve(const std::string& path) const {
  const std::filesystem::path p(path);
  return p.is_absolute() ? path : (std::filesystem::path(base_dir) / p).string();
}

VelocityProfile ExperimentConfig::make_profile() const {
  const int d = dimension;
  const auto& p = profile;
  if (p.family == "gaussian") return VelocityProfile::gaussian(d, p.beta, p.amplitude);
  if (p.family == "fermi_dirac") return VelocityProfile::fermi_dirac(d, p.beta, p.mu, p.amplitude);
  if (p.family == "two_stream") return VelocityProfile::two_stream(d, p.beta, p.v0, p.amplitude);
  if (p.family == "ball") return VelocityProfile::ball_indicator(d, p.mu, p.amplitude);
  return VelocityProfile::load_csv(d, resolve(p.path));
}

InteractionPotential ExperimentConfig::make_potential() const {
  const int d = dimension;
  const auto& w = potential;
  if (w.family == "delta") return InteractionPotential::delta(d, w.c);
  if (w.family == "gaussian") return InteractionPotential::gaussian(d, w.c, w.width);
  return InteractionPotential::yukawa(d, w.c, w.mass);
}

DensityMatrixState ExperimentConfig::make_initial() const {
  const TorusGrid G = torus();
  const auto M = static_cast<Eigen::Index>(G.size());
  if (initial.kind == "file") {
    auto s = read_state(resolve(initial.path));
    if (!(s.grid == G)) throw InvalidArgument("initial state grid differs from the configured grid");
    return s;
  }
  auto envelope = [&](std::size_t a) { return std::exp(-initial.width * G.k2(a)); };
  if (initial.amplitude == 0.0) return DensityMatrixState(G);
  if (initial.kind == "rank1") {
    CVector u(M);
    for (std::size_t a = 0; a < G.size(); ++a)
      u(static_cast<Eigen::Index>(a)) = envelope(a) * std::polar(1.0, -initial.shift * G.momentum(a)[0]);
    u /= u.norm();
    return DensityMatrixState(G, initial.amplitude * u * u.adjoint(), "rank1");
  }
  // random: sum_j lambda_j |u_j><u_j| with Gaussian coefficients under the envelope
  std::mt19937_64 rng(initial.seed.value_or(seed));
  std::normal_distribution<double> nd;
  CMatrix A(M, initial.rank);
  for (Eigen::Index a = 0; a < M; ++a)
    for (Eigen::Index j = 0; j < A.cols(); ++j) A(a, j) = envelope(static_cast<std::size_t>(a)) * cd(nd(rng), nd(rng));
  CMatrix Q = A * A.adjoint();
  Q *= initial.amplitude / Q.trace().real();
  return DensityMatrixState(G, Q, "random");
}

ResponseKernel ExperimentConfig::make_kernel(const std::string& kernel, const std::string& rule) const {
  return ResponseKernel(make_profile(), make_potential(),
                        kernel == "lattice" ? KernelModel::lattice : KernelModel::continuum,
                        rule == "split_step" ? TimeRule::split_step : TimeRule::trapezoid);
}

}  // namespace hartree
