#include <cmath>
#include <filesystem>

#include "adqc/error.hpp"
#include "adqc/gaussian_source.hpp"
#include "adqc/philox.hpp"
#include "doctest.h"

using namespace adqc;

namespace {

struct Moments {
  double mean[3];
  double cov[3][3];
};

// Two-pass sample moments, written independently of the sampler.
Moments moments(const Dataset& ds) {
  Moments m{};
  const double n = static_cast<double>(ds.size());
  for (const auto& s : ds.samples()) {
    const double v[3] = {s.x, s.y, s.z};
    for (int i = 0; i < 3; ++i) m.mean[i] += v[i] / n;
  }
  for (const auto& s : ds.samples()) {
    const double v[3] = {s.x - m.mean[0], s.y - m.mean[1], s.z - m.mean[2]};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) m.cov[i][j] += v[i] * v[j] / (n - 1.0);
  }
  return m;
}

double correlation(const Moments& m, int i, int j) { return m.cov[i][j] / std::sqrt(m.cov[i][i] * m.cov[j][j]); }

}  // namespace

TEST_CASE("philox4x32-10 known-answer vectors") {
  using C = Philox4x32::Counter;
  CHECK(Philox4x32::block(C{0, 0, 0, 0}, {0, 0}) == C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(Philox4x32::block(C{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
        C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(Philox4x32::block(C{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
        C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("validate_config") {
  CHECK_NOTHROW(validate_config({0.9, 0.8, 0.8}));
  CHECK_NOTHROW(validate_config({1.0, 0.8, 0.8}));

  // det = 1 + 2*0*0.8*0.8 - 0 - 0.64 - 0.64 = -0.28
  try {
    validate_config({0.0, 0.8, 0.8});
    FAIL("expected NotPositiveSemidefinite");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NotPositiveSemidefinite);
    CHECK(std::string(e.what()).find("eigenvalue") != std::string::npos);
  }
  try {
    validate_config({1.2, 0.8, 0.8});
    FAIL("expected CorrelationOutOfRange");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::CorrelationOutOfRange);
  }
  CHECK_THROWS_AS(sample_dataset({0.0, 0.8, 0.8}, 10, 1), Error);
  CHECK_THROWS_AS(sample_dataset({0.9, 0.8, 0.8}, 0, 1), Error);
}

TEST_CASE("covariance factor reproduces sigma, including the singular boundary") {
  for (const CorrelationConfig cfg : {CorrelationConfig{0.9, 0.8, 0.8}, CorrelationConfig{1.0, 0.8, 0.8},
                                      CorrelationConfig{0.3, -0.2, 0.5}}) {
    const auto a = covariance_factor(cfg);
    const auto sigma = covariance(cfg);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k) s += a[i][k] * a[j][k];
        CHECK(s == doctest::Approx(sigma[i][j]).epsilon(1e-12));
      }
  }
}

TEST_CASE("perfect correlation gives x == y") {
  const auto ds = sample_dataset({1.0, 0.8, 0.8}, 100, 42);
  for (const auto& s : ds.samples()) CHECK(s.x == s.y);
}

TEST_CASE("datasets are a pure function of (config, n, seed)") {
  const CorrelationConfig cfg{0.9, 0.8, 0.8};
  const auto a = sample_dataset(cfg, 1000, 7);
  const auto b = sample_dataset(cfg, 1000, 7);
  const auto c = sample_dataset(cfg, 1000, 8);
  bool identical = true, differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    identical &= a[i].x == b[i].x && a[i].y == b[i].y && a[i].z == b[i].z;
    differs |= a[i].x != c[i].x;
  }
  CHECK(identical);
  CHECK(differs);
  // Prefix property of counter-based generation.
  const auto prefix = sample_dataset(cfg, 10, 7);
  for (std::size_t i = 0; i < prefix.size(); ++i) CHECK(prefix[i].z == a[i].z);
}

TEST_CASE("sample covariance converges to sigma at n = 1e6") {
  const CorrelationConfig cfg{0.9, 0.8, 0.8};
  const auto m = moments(sample_dataset(cfg, 1'000'000, 2024));
  const auto sigma = covariance(cfg);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(std::abs(m.cov[i][j] - sigma[i][j]) <= 0.01);
}

TEST_CASE("correlation and marginal properties over 20 seeds") {
  const std::size_t n = 100'000;
  const double tol = 5.0 / std::sqrt(static_cast<double>(n));
  for (const CorrelationConfig cfg : {CorrelationConfig{0.95, 0.8, 0.8}, CorrelationConfig{0.5, 0.3, -0.1}}) {
    int ok = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const auto m = moments(sample_dataset(cfg, n, seed));
      bool good = std::abs(correlation(m, 0, 1) - cfg.rho_ab) <= tol;
      for (int i = 0; i < 3; ++i) good &= std::abs(m.mean[i]) <= tol && std::abs(m.cov[i][i] - 1.0) <= tol;
      ok += good;
    }
    CHECK(ok >= 19);
  }
}

TEST_CASE("swapping Bob and Eve roles is statistically exchangeable") {
  const std::size_t n = 200'000;
  const double tol = 5.0 / std::sqrt(static_cast<double>(n));
  const auto orig = moments(sample_dataset({0.9, 0.6, 0.7}, n, 11));
  // y <-> z swaps rho_ab with rho_ae and leaves rho_be in place.
  const auto swapped = moments(sample_dataset({0.6, 0.9, 0.7}, n, 12));
  CHECK(std::abs(correlation(orig, 0, 1) - correlation(swapped, 0, 2)) <= 2 * tol);
  CHECK(std::abs(correlation(orig, 0, 2) - correlation(swapped, 0, 1)) <= 2 * tol);
  CHECK(std::abs(correlation(orig, 1, 2) - correlation(swapped, 1, 2)) <= 2 * tol);
  CHECK(std::abs(orig.cov[1][1] - swapped.cov[2][2]) <= 2 * tol);
}

TEST_CASE("dataset CSV export and import") {
  const auto ds = sample_dataset({0.9, 0.8, 0.8}, 50, 3);
  const auto path = std::filesystem::temp_directory_path() / "adqc_dataset_test.csv";
  write_dataset(ds, path);
  const auto back = read_dataset(path);
  CHECK(back.seed() == ds.seed());
  CHECK(back.config() == ds.config());
  REQUIRE(back.size() == ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(back[i].x == ds[i].x);
    CHECK(back[i].z == ds[i].z);
  }
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_dataset(path), Error);
}
