#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace adqc {

// Pairwise correlations of the zero-mean, unit-variance (Alice, Bob, Eve)
// feature triple.
struct CorrelationConfig {
  double rho_ab = 0.9;
  double rho_ae = 0.8;
  double rho_be = 0.8;

  friend bool operator==(const CorrelationConfig&, const CorrelationConfig&) = default;
};

using Matrix3 = std::array<std::array<double, 3>, 3>;

Matrix3 covariance(const CorrelationConfig& cfg);

// Throws Error{CorrelationOutOfRange} or Error{NotPositiveSemidefinite}.
void validate_config(const CorrelationConfig& cfg);

// Symmetric square root factor A (A A^T = covariance) built from an
// eigendecomposition with eigenvalues below the PSD tolerance clamped to 0, so
// rank-deficient configurations (rho_ab = 1) sample exactly.
Matrix3 covariance_factor(const CorrelationConfig& cfg);

struct TriSample {
  double x = 0.0;  // Alice
  double y = 0.0;  // Bob
  double z = 0.0;  // Eve
};

class Dataset {
 public:
  Dataset(std::vector<TriSample> samples, std::uint64_t seed, CorrelationConfig config);

  std::span<const TriSample> samples() const noexcept { return samples_; }
  std::size_t size() const noexcept { return samples_.size(); }
  const TriSample& operator[](std::size_t i) const noexcept { return samples_[i]; }
  std::uint64_t seed() const noexcept { return seed_; }
  const CorrelationConfig& config() const noexcept { return config_; }

 private:
  std::vector<TriSample> samples_;
  std::uint64_t seed_;
  CorrelationConfig config_;
};

inline constexpr std::string_view kGeneratorName = "philox4x32-10/box-muller";

// Three independent standard normals for sample `index`; a pure function of
// (seed, index).
std::array<double, 3> standard_normals(std::uint64_t seed, std::uint64_t index);

Dataset sample_dataset(const CorrelationConfig& cfg, std::size_t n, std::uint64_t seed);

// CSV with header "x,y,z" plus a JSON sidecar (<csv>.meta.json) holding the
// config, n, seed and generator name.
void write_dataset(const Dataset& ds, const std::filesystem::path& csv_path);
Dataset read_dataset(const std::filesystem::path& csv_path);

}  // namespace adqc
