#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <set>
#include <string>

#include <Eigen/Eigenvalues>
#include <sys/wait.h>

#include "hartree/config.hpp"
#include "hartree/errors.hpp"
#include "hartree/io.hpp"
#include "hartree/response.hpp"
#include "hartree/runner.hpp"

using namespace hartree;
using nlohmann::json;

namespace {

// fresh scratch directory per test case
fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hartree_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<SchemaViolation> violations(const json& j) {
  try {
    parse_config(j);
  } catch (const SchemaError& e) {
    return e.violations;
  }
  return {};
}

bool has_pointer(const std::vector<SchemaViolation>& v, const std::string& ptr) {
  for (const auto& x : v)
    if (x.pointer == ptr) return true;
  return false;
}

int cli(const std::string& args) {
  const int rc = std::system((std::string(HARTREE_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

json small() {
  return json{{"dimension", 1},
              {"grid", {{"n", 8}, {"length", 10.0}}},
              {"time", {{"dt", 0.1}, {"t_final", 1.0}, {"store_stride", 2}}},
              {"profile", {{"family", "gaussian"}, {"beta", 1.0}}},
              {"potential", {{"family", "delta"}, {"c", 0.3}}}};
}

void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2)); }

// keys of a default config against the published schema, recursively
void compare_keys(const json& cfg, const json& schema, const std::string& where) {
  std::set<std::string> a, b;
  for (const auto& [k, v] : cfg.items()) a.insert(k);
  for (const auto& [k, v] : schema.at("properties").items()) b.insert(k);
  CHECK_MESSAGE(a == b, where);
  for (const auto& [k, v] : cfg.items())
    if (v.is_object() && schema["properties"][k].contains("properties")) compare_keys(v, schema["properties"][k], where + "/" + k);
}

}  // namespace

TEST_CASE("parse config") {
  SUBCASE("minimal config gets the defaults") {
    const auto c = parse_config(json::object());
    CHECK(c.dimension == 1);
    CHECK(c.grid.n == 32);
    CHECK(c.time.n_steps() == 400);
    CHECK(c.solver.scheme == "direct");
    CHECK(c.initial.amplitude == 1e-2);
    CHECK(c.to_json()["time"]["dt"] == 0.05);
  }
  SUBCASE("nonpositive dt") {
    auto j = small();
    j["time"]["dt"] = 0.0;
    CHECK(has_pointer(violations(j), "/time/dt"));
    j["time"]["dt"] = -0.1;
    CHECK(has_pointer(violations(j), "/time/dt"));
  }
  SUBCASE("unknown key is named") {
    auto j = small();
    j["potental"] = json{{"c", 1}};
    const auto v = violations(j);
    REQUIRE(v.size() == 1);
    CHECK(v[0].pointer == "/potental");
    CHECK(v[0].message.find("potental") != std::string::npos);
    j.erase("potental");
    j["grid"]["nn"] = 3;
    CHECK(has_pointer(violations(j), "/grid/nn"));
  }
  SUBCASE("all violations are reported") {
    auto j = small();
    j["grid"]["n"] = 7;
    j["grid"]["length"] = -1;
    j["profile"]["family"] = "maxwell";
    j["solver"] = {{"damping", 1.5}};
    const auto v = violations(j);
    CHECK(v.size() == 4);
    CHECK(has_pointer(v, "/grid/n"));
    CHECK(has_pointer(v, "/grid/length"));
    CHECK(has_pointer(v, "/profile/family"));
    CHECK(has_pointer(v, "/solver/damping"));
  }
  SUBCASE("horizon must be a whole number of steps") {
    auto j = small();
    j["time"]["t_final"] = 1.05;
    CHECK(has_pointer(violations(j), "/time/t_final"));
  }
  SUBCASE("files") {
    CHECK_THROWS_AS(parse_config_file("/nonexistent/cfg.json"), IoError);
    const auto dir = scratch("files");
    write_text(dir / "bad.json", "{ not json");
    CHECK_THROWS_AS(parse_config_file((dir / "bad.json").string()), SchemaError);
    write_json(dir / "ok.json", small());
    CHECK(parse_config_file((dir / "ok.json").string()).base_dir == dir.string());
  }
  SUBCASE("round trip and published schema") {
    const auto c = parse_config(small());
    CHECK(parse_config(c.to_json()).to_json() == c.to_json());
    const json schema = json::parse(read_text(fs::path(HARTREE_SOURCE_DIR) / "schema" / "config.schema.json"));
    compare_keys(parse_config(json::object()).to_json(), schema, "");
  }
}

TEST_CASE("initial data") {
  auto j = small();
  j["initial"] = {{"kind", "random"}, {"amplitude", 0.5}, {"rank", 3}, {"seed", 4}};
  const auto Q = parse_config(j).make_initial();
  CHECK(Q.trace().real() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(Q.herm_defect() < 1e-14);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(Q.Q);
  CHECK(es.eigenvalues().minCoeff() > -1e-14);
  int rank = 0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) rank += es.eigenvalues()(i) > 1e-12;
  CHECK(rank == 3);
  j["initial"]["amplitude"] = 0.0;
  CHECK(parse_config(j).make_initial().Q.norm() == 0.0);
}

TEST_CASE("simulate with zero data") {
  const auto dir = scratch("zero");
  auto j = small();
  j["initial"] = {{"amplitude", 0.0}};
  write_json(dir / "cfg.json", j);
  REQUIRE(cli("simulate --scheme direct --threads 1 --config " + (dir / "cfg.json").string() + " --out " +
              (dir / "out").string()) == 0);
  const auto m = json::parse(read_text(dir / "out" / "manifest.json"));
  CHECK(m["exit_code"] == 0);
  CHECK(m["config_hash"].get<std::string>().rfind("fnv1a64:", 0) == 0);
  CHECK(m["config"]["initial"]["amplitude"] == 0.0);
  const auto rho = read_field(dir / "out" / "trajectory" / "rho");
  for (const auto& x : rho.data()) CHECK(x == cd(0.0));
  const auto sc = json::parse(read_text(dir / "out" / "scattering.json"));
  CHECK(sc["tail_first"] == 0.0);
  CHECK(sc["tail_last"] == 0.0);
  // an existing run is kept unless forced
  CHECK(cli("simulate --threads 1 --config " + (dir / "cfg.json").string() + " --out " + (dir / "out").string()) == 1);
  CHECK(cli("simulate --threads 1 --force --config " + (dir / "cfg.json").string() + " --out " +
            (dir / "out").string()) == 0);
}

TEST_CASE("reruns are bit-identical") {
  const auto dir = scratch("rerun");
  auto j = small();
  j["initial"] = {{"kind", "random"}, {"amplitude", 0.05}};
  j["verify"] = {{"suite", "hs"}, {"hs", {{"samples", 3}, {"n_steps", 4}}}};
  write_json(dir / "cfg.json", j);
  const std::string cfg = " --threads 1 --seed 11 --config " + (dir / "cfg.json").string();
  for (const char* run : {"a", "b"}) {
    REQUIRE(cli("simulate" + cfg + " --out " + (dir / run / "sim").string()) == 0);
    REQUIRE(cli("verify" + cfg + " --out " + (dir / run / "ver").string()) == 0);
  }
  for (const char* f : {"sim/trajectory/ledger.csv", "sim/convergence.csv", "ver/hs_ratios.csv"})
    CHECK_MESSAGE(read_text(dir / "a" / f) == read_text(dir / "b" / f), f);
  CHECK(read_text(dir / "a" / "sim" / "trajectory" / "rho.bin") == read_text(dir / "b" / "sim" / "trajectory" / "rho.bin"));
  // another seed draws another state
  REQUIRE(cli("simulate --threads 1 --seed 12 --config " + (dir / "cfg.json").string() + " --out " +
              (dir / "c").string()) == 0);
  CHECK(read_text(dir / "a" / "sim" / "trajectory" / "ledger.csv") != read_text(dir / "c" / "trajectory" / "ledger.csv"));
}

TEST_CASE("exit codes") {
  const auto dir = scratch("codes");
  auto j = small();
  j["solver"] = {{"scheme", "fixedpoint"}, {"max_iter", 1}};
  write_json(dir / "nc.json", j);
  CHECK(cli("simulate --threads 1 --config " + (dir / "nc.json").string() + " --out " + (dir / "nc").string()) == 2);
  CHECK(fs::exists(dir / "nc" / "convergence.csv"));
  CHECK(json::parse(read_text(dir / "nc" / "manifest.json"))["exit_code"] == 2);

  j["solver"] = {{"scheme", "direct"}, {"breach_tol", 1e-300}};
  j["initial"] = {{"kind", "random"}, {"amplitude", 0.5}};
  write_json(dir / "br.json", j);
  CHECK(cli("simulate --threads 1 --config " + (dir / "br.json").string() + " --out " + (dir / "br").string()) == 3);
  CHECK(fs::exists(dir / "br" / "ledger.csv"));

  j = small();
  j["potental"] = 1;
  write_json(dir / "bad.json", j);
  CHECK(cli("simulate --config " + (dir / "bad.json").string() + " --out " + (dir / "bad").string()) == 1);
  CHECK(!fs::exists(dir / "bad"));
  CHECK(cli("nosuch") == 1);
  CHECK(run("nosuch", parse_config(small()), RunFlags{.out = (dir / "x").string(), .threads = 1}).exit_code == 1);
}

TEST_CASE("penrose on a stable configuration") {
  const auto dir = scratch("penrose");
  auto j = small();
  j["scan"] = {{"n_tau", 6}, {"n_omega", 33}, {"n_xi", 16}, {"max_refinements", 1}};
  write_json(dir / "cfg.json", j);
  REQUIRE(cli("penrose --threads 1 --config " + (dir / "cfg.json").string() + " --out " + (dir / "p").string()) == 0);
  const auto rep = json::parse(read_text(dir / "p" / "report.json"));
  CHECK(rep["stable"] == true);
  CHECK(read_text(dir / "p" / "scan.csv").rfind("tau,omega,xi,re,im,abs\n", 0) == 0);
  CHECK(fs::exists(dir / "p" / "sufficiency.json"));
}

TEST_CASE("respond round trip and the output override") {
  const auto dir = scratch("respond");
  const auto c = parse_config(small());
  SpaceTimeField f(c.time_grid(), c.torus().doubled());
  for (std::size_t i = 0; i < f.samples(); ++i) {
    std::vector<cd> v(f.modes());
    for (std::size_t x = 0; x < v.size(); ++x) v[x] = std::sin(0.3 * double(i) + double(x));
    f.set_values(i, v);
  }
  write_field(dir / "in", f);
  write_json(dir / "cfg.json", small());
  const std::string cfg = " --threads 1 --config " + (dir / "cfg.json").string();
  REQUIRE(cli("respond --mode apply --input " + (dir / "in").string() + cfg + " --out " + (dir / "a").string()) == 0);
  REQUIRE(cli("respond --mode invert --input " + (dir / "a" / "response").string() + cfg + " --out " +
              (dir / "b").string()) == 0);
  // same as the library called in process
  const auto k = c.make_kernel("continuum", "trapezoid");
  auto expect = invert_response(k, apply_response(k, f));
  auto got = read_field(dir / "b" / "response");
  double err = 0, ref = 0;
  for (std::size_t i = 0; i < got.data().size(); ++i) {
    err = std::max(err, std::abs(got.data()[i] - expect.data()[i]));
    ref = std::max(ref, std::abs(expect.data()[i]));
  }
  CHECK(err <= 1e-13 * ref);

  ::setenv("HARTREE_OUT_DIR", (dir / "env").string().c_str(), 1);
  CHECK(cli("dispersion --xi 0.5 --steps 5" + cfg) == 0);
  ::unsetenv("HARTREE_OUT_DIR");
  CHECK(fs::exists(dir / "env" / "dispersion" / "dispersion.csv"));
  CHECK(fs::exists(dir / "env" / "dispersion" / "root.json"));
}
