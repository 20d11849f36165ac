#include "adqc/gaussian_source.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <fstream>
#include <iomanip>
#include "json.hpp"
#include <numbers>
#include <sstream>
#include <string>

#include "adqc/error.hpp"
#include "adqc/philox.hpp"

namespace adqc {

namespace {

constexpr double kPsdTolerance = 1e-10;

Eigen::Matrix3d to_eigen(const Matrix3& m) {
  Eigen::Matrix3d out;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out(i, j) = m[i][j];
  return out;
}

double unit_open(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((std::uint64_t{hi} << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
  auto p = csv_path;
  p += ".meta.json";
  return p;
}

}  // namespace

Matrix3 covariance(const CorrelationConfig& cfg) {
  return {{{1.0, cfg.rho_ab, cfg.rho_ae}, {cfg.rho_ab, 1.0, cfg.rho_be}, {cfg.rho_ae, cfg.rho_be, 1.0}}};
}

void validate_config(const CorrelationConfig& cfg) {
  for (double rho : {cfg.rho_ab, cfg.rho_ae, cfg.rho_be}) {
    if (!(rho >= -1.0 && rho <= 1.0)) {
      std::ostringstream msg;
      msg << "correlation " << rho << " outside [-1, 1]";
      throw Error(Errc::CorrelationOutOfRange, msg.str());
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(to_eigen(covariance(cfg)), Eigen::EigenvaluesOnly);
  const double smallest = solver.eigenvalues().minCoeff();
  if (smallest < -kPsdTolerance) {
    std::ostringstream msg;
    msg << std::setprecision(17) << "covariance has eigenvalue " << smallest;
    throw Error(Errc::NotPositiveSemidefinite, msg.str());
  }
}

Matrix3 covariance_factor(const CorrelationConfig& cfg) {
  validate_config(cfg);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(to_eigen(covariance(cfg)));
  const Eigen::Vector3d roots = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Eigen::Matrix3d factor = solver.eigenvectors() * roots.asDiagonal();
  Matrix3 out{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out[i][j] = factor(i, j);
  return out;
}

Dataset::Dataset(std::vector<TriSample> samples, std::uint64_t seed, CorrelationConfig config)
    : samples_(std::move(samples)), seed_(seed), config_(config) {}

std::array<double, 3> standard_normals(std::uint64_t seed, std::uint64_t index) {
  const Philox4x32::Key key{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  const auto lo = static_cast<std::uint32_t>(index);
  const auto hi = static_cast<std::uint32_t>(index >> 32);
  const auto first = Philox4x32::block({lo, hi, 0u, 0u}, key);
  const auto second = Philox4x32::block({lo, hi, 1u, 0u}, key);

  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double r0 = std::sqrt(-2.0 * std::log(unit_open(first[0], first[1])));
  const double a0 = two_pi * unit_open(first[2], first[3]);
  const double r1 = std::sqrt(-2.0 * std::log(unit_open(second[0], second[1])));
  const double a1 = two_pi * unit_open(second[2], second[3]);
  return {r0 * std::cos(a0), r0 * std::sin(a0), r1 * std::cos(a1)};
}

Dataset sample_dataset(const CorrelationConfig& cfg, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw Error(Errc::InvalidSampleCount, "dataset needs at least one sample");
  const Matrix3 a = covariance_factor(cfg);
  std::vector<TriSample> samples(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto g = standard_normals(seed, i);
    samples[i] = {a[0][0] * g[0] + a[0][1] * g[1] + a[0][2] * g[2],
                  a[1][0] * g[0] + a[1][1] * g[1] + a[1][2] * g[2],
                  a[2][0] * g[0] + a[2][1] * g[1] + a[2][2] * g[2]};
  }
  // With rho_ab = 1 the first two rows of the factor agree only up to
  // rounding; make the x = y identity exact.
  if (cfg.rho_ab == 1.0)
    for (auto& s : samples) s.y = s.x;
  return Dataset(std::move(samples), seed, cfg);
}

void write_dataset(const Dataset& ds, const std::filesystem::path& csv_path) {
  std::ofstream out(csv_path);
  if (!out) throw Error(Errc::Io, "cannot open " + csv_path.string());
  out << std::setprecision(17) << "x,y,z\n";
  for (const auto& s : ds.samples()) out << s.x << ',' << s.y << ',' << s.z << '\n';
  if (!out) throw Error(Errc::Io, "write failed for " + csv_path.string());

  const nlohmann::ordered_json meta = {
      {"rho_ab", ds.config().rho_ab}, {"rho_ae", ds.config().rho_ae}, {"rho_be", ds.config().rho_be},
      {"n", ds.size()},               {"seed", ds.seed()},            {"generator", kGeneratorName},
  };
  std::ofstream side(sidecar_path(csv_path));
  if (!side) throw Error(Errc::Io, "cannot open sidecar for " + csv_path.string());
  side << meta.dump(2) << '\n';
}

Dataset read_dataset(const std::filesystem::path& csv_path) {
  std::ifstream side(sidecar_path(csv_path));
  if (!side) throw Error(Errc::Io, "missing sidecar for " + csv_path.string());
  nlohmann::json meta;
  try {
    side >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Parse, e.what());
  }
  const CorrelationConfig cfg{meta.at("rho_ab").get<double>(), meta.at("rho_ae").get<double>(),
                              meta.at("rho_be").get<double>()};
  validate_config(cfg);

  std::ifstream in(csv_path);
  if (!in) throw Error(Errc::Io, "cannot open " + csv_path.string());
  std::string line;
  if (!std::getline(in, line) || line != "x,y,z") throw Error(Errc::Parse, "expected header x,y,z");
  std::vector<TriSample> samples;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    TriSample s;
    char c1 = 0, c2 = 0;
    std::istringstream row(line);
    if (!(row >> s.x >> c1 >> s.y >> c2 >> s.z) || c1 != ',' || c2 != ',')
      throw Error(Errc::Parse, "bad dataset row: " + line);
    samples.push_back(s);
  }
  if (samples.size() != meta.at("n").get<std::size_t>())
    throw Error(Errc::Parse, "row count does not match sidecar n");
  return Dataset(std::move(samples), meta.at("seed").get<std::uint64_t>(), cfg);
}

}  // namespace adqc
