#include "hartree/io.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <boost/version.hpp>
#include <fftw3.h>

#include "hartree/errors.hpp"

#ifndef HARTREE_VERSION
#define HARTREE_VERSION "0.0.0"
#endif

namespace hartree {

static_assert(std::endian::native == std::endian::little, "binary artifacts assume a little-endian host");

namespace {

fs::path with_ext(const fs::path& base, const char* ext) {
  fs::path p = base;
  p += ext;
  return p;
}

void write_complex(const fs::path& path, const cd* data, std::size_t n) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  os.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(cd)));
  if (!os) throw IoError("short write to " + path.string());
}

std::vector<double> read_doubles(const fs::path& path, std::size_t n) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read " + path.string());
  std::vector<double> v(n);
  is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (is.gcount() != static_cast<std::streamsize>(n * sizeof(double)))
    throw IoError(path.string() + " holds fewer values than its sidecar declares");
  if (is.peek() != std::char_traits<char>::eof()) throw IoError(path.string() + " holds more values than declared");
  return v;
}

nlohmann::json read_json(const fs::path& path) {
  try {
    return nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

nlohmann::json grid_json(const TorusGrid& g) { return {{"d", g.dim()}, {"n", g.n()}, {"length", g.length()}}; }

TorusGrid grid_from(const nlohmann::json& j) {
  return TorusGrid(j.at("d").get<int>(), j.at("n").get<int>(), j.at("length").get<double>());
}

}  // namespace

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  os << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

// ---------------------------------------------------------------- state

void write_state(const fs::path& base, const DensityMatrixState& s) {
  if (base.has_parent_path()) fs::create_directories(base.parent_path());
  // CMatrix is row-major already
  write_complex(with_ext(base, ".bin"), s.Q.data(), static_cast<std::size_t>(s.Q.size()));
  const cd tr = s.Q.trace();
  nlohmann::json j{{"kind", "density_matrix"},
                   {"grid", grid_json(s.grid)},
                   {"label", s.label},
                   {"layout", "row-major, interleaved re/im, little-endian f64, momentum basis in FFT order"},
                   {"rows", s.Q.rows()},
                   {"hermiticity_defect", herm_defect(s.Q)},
                   {"trace", {tr.real(), tr.imag()}}};
  write_text(with_ext(base, ".json"), j.dump(2));
}

DensityMatrixState read_state(const fs::path& base) {
  const auto j = read_json(with_ext(base, ".json"));
  if (j.value("kind", "") != "density_matrix") throw IoError(base.string() + " is not a density matrix sidecar");
  const TorusGrid g = grid_from(j.at("grid"));
  const auto M = static_cast<Eigen::Index>(g.size());
  const auto v = read_doubles(with_ext(base, ".bin"), 2 * g.size() * g.size());
  CMatrix Q(M, M);
  for (Eigen::Index i = 0; i < Q.size(); ++i)
    Q.data()[i] = cd(v[2 * static_cast<std::size_t>(i)], v[2 * static_cast<std::size_t>(i) + 1]);
  DensityMatrixState s(g, std::move(Q), j.value("label", std::string("perturbation")));
  const double declared = j.value("hermiticity_defect", 0.0);
  if (std::abs(s.herm_defect() - declared) > 1e-12 * (1.0 + declared))
    throw IoError(base.string() + ": hermiticity checksum does not match the data");
  return s;
}

// ---------------------------------------------------------------- fields

void write_field(const fs::path& base, const SpaceTimeField& f) {
  if (base.has_parent_path()) fs::create_directories(base.parent_path());
  write_complex(with_ext(base, ".bin"), f.data().data(), f.data().size());
  nlohmann::json j{{"kind", "space_time_field"},
                   {"grid", grid_json(f.grid())},
                   {"time", {{"n_steps", f.time().n_steps}, {"dt", f.time().dt}}},
                   {"real", f.real()},
                   {"representation", "coefficients"},
                   {"shape", {f.samples(), f.modes()}},
                   {"layout", "sample-major, interleaved re/im, little-endian f64, Fourier coefficients in FFT order"}};
  write_text(with_ext(base, ".json"), j.dump(2));
}

SpaceTimeField read_field(const fs::path& base) {
  const auto j = read_json(with_ext(base, ".json"));
  if (j.value("kind", "") != "space_time_field") throw IoError(base.string() + " is not a field sidecar");
  const TorusGrid g = grid_from(j.at("grid"));
  const TimeGrid tg(j.at("time").at("n_steps").get<int>(), j.at("time").at("dt").get<double>());
  const std::string rep = j.value("representation", std::string("coefficients"));
  SpaceTimeField f(tg, g, j.value("real", true));
  if (rep == "coefficients") {
    const auto v = read_doubles(with_ext(base, ".bin"), 2 * f.data().size());
    for (std::size_t i = 0; i < f.data().size(); ++i) f.data()[i] = cd(v[2 * i], v[2 * i + 1]);
  } else if (rep == "values") {
    // real samples at the grid points, sample-major
    const auto v = read_doubles(with_ext(base, ".bin"), f.data().size());
    std::vector<cd> row(g.size());
    for (std::size_t i = 0; i < f.samples(); ++i) {
      for (std::size_t x = 0; x < g.size(); ++x) row[x] = v[i * g.size() + x];
      f.set_values(i, row);
    }
    f.set_real(true);
  } else {
    throw IoError(base.string() + ": unknown representation '" + rep + "'");
  }
  return f;
}

// ---------------------------------------------------------------- manifests

std::string library_versions() {
  nlohmann::json j;
  j["hartree"] = HARTREE_VERSION;
  j["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
               std::to_string(EIGEN_MINOR_VERSION);
  j["boost"] = BOOST_LIB_VERSION;
  j["fftw"] = std::string(fftw_version);
  j["nlohmann_json"] = std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) +
                       "." + std::to_string(NLOHMANN_JSON_VERSION_PATCH);
  return j.dump();
}

void write_manifest(const fs::path& dir, const RunInfo& info) {
  const std::string canonical = info.config.dump();
  nlohmann::json j{{"subcommand", info.subcommand},
                   {"config", info.config},
                   {"config_hash", "fnv1a64:" + hex64(fnv1a64(canonical))},
                   {"seed", info.seed},
                   {"threads", info.threads},
                   {"versions", nlohmann::json::parse(library_versions())},
                   {"wall_seconds", info.wall_seconds},
                   {"argv", info.argv},
                   {"artifacts", info.artifacts},
                   {"exit_code", info.exit_code}};
  if (!info.error.empty()) j["error"] = info.error;
  write_text(dir / "manifest.json", j.dump(2));
}

std::vector<std::string> write_trajectory(const fs::path& dir, const Trajectory& tr) {
  fs::create_directories(dir / "snapshots");
  std::vector<std::string> out;
  write_text(dir / "ledger.csv", tr.ledger_csv());
  out.push_back("ledger.csv");
  write_field(dir / "rho", tr.rho);
  out.push_back("rho.bin");
  out.push_back("rho.json");
  nlohmann::json idx{{"grid", grid_json(tr.grid)},
                     {"time", {{"n_steps", tr.time.n_steps}, {"dt", tr.time.dt}}},
                     {"notes", tr.notes},
                     {"snapshots", nlohmann::json::array()}};
  char name[32];
  for (std::size_t i = 0; i < tr.snapshots.size(); ++i) {
    std::snprintf(name, sizeof name, "step_%06zu", tr.snapshot_steps[i]);
    write_state(dir / "snapshots" / name, tr.snapshots[i]);
    idx["snapshots"].push_back({{"step", tr.snapshot_steps[i]},
                                {"time", tr.time.t(tr.snapshot_steps[i])},
                                {"file", std::string("snapshots/") + name}});
  }
  out.push_back("snapshots/");
  write_text(dir / "trajectory.json", idx.dump(2));
  out.push_back("trajectory.json");
  return out;
}

}  // namespace hartree
