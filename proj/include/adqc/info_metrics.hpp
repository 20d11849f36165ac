#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "adqc/protocols.hpp"

namespace adqc {

// Empirical joint distribution of two symbols over an M x M alphabet.
class JointPmf {
 public:
  explicit JointPmf(std::size_t levels) : levels_(levels), counts_(levels * levels, 0) {}

  std::size_t levels() const noexcept { return levels_; }
  std::uint64_t total() const noexcept { return total_; }
  std::uint64_t count(std::size_t i, std::size_t j) const noexcept { return counts_[i * levels_ + j]; }
  double probability(std::size_t i, std::size_t j) const noexcept {
    return static_cast<double>(count(i, j)) / static_cast<double>(total_);
  }

  // Unchecked; callers guarantee i, j < levels().
  void add(std::size_t i, std::size_t j, std::uint64_t weight = 1) noexcept {
    counts_[i * levels_ + j] += weight;
    total_ += weight;
  }
  // Associative and commutative; shards of one dataset can be merged in any order.
  void merge(const JointPmf& other);
  void clear() noexcept;

  std::vector<std::uint64_t> row_counts() const;
  std::vector<std::uint64_t> column_counts() const;

 private:
  std::size_t levels_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

// Throws EmptyInput or SymbolOutOfRange.
JointPmf joint_pmf(std::span<const std::pair<int, int>> pairs, std::size_t levels);

// Plug-in estimate in bits, clamped below at 0. Returns 0 for an empty pmf.
double mutual_information(const JointPmf& p);

// Plug-in entropy in bits of a count vector.
double entropy(std::span<const std::uint64_t> counts);

enum class EveMode { Correcting, Raw };

struct MetricsReport {
  double i_ab = 0.0;
  double i_ae = 0.0;
  double i_be = 0.0;
  double c_sk_low = 0.0;          // i_ab - min(i_ae, i_be), signed
  double c_sk_low_rate = 0.0;     // c_sk_low * retention
  double c_ab = 0.0;              // i_ab / b
  double beta = 0.0;              // B / b
  std::optional<double> gamma;    // filled by the gamma experiment
  double retention = 1.0;
  std::uint64_t total = 0;
  std::uint64_t retained = 0;
  EveMode eve_mode = EveMode::Correcting;  // the mode reported in i_ae / i_be
};

// Streaming histogram of the symbol pairs that enter the key-rate bound.
class SymbolCounts {
 public:
  explicit SymbolCounts(std::size_t levels);

  void add(const ProtocolOutcome& o) noexcept {
    ++total_;
    if (!o.retained) return;
    ab_.add(o.sym_a, o.sym_b);
    ae_.add(o.sym_a, o.sym_e);
    be_.add(o.sym_b, o.sym_e);
    ae_raw_.add(o.sym_a, o.sym_e_raw);
    be_raw_.add(o.sym_b, o.sym_e_raw);
  }
  void merge(const SymbolCounts& other);
  void clear() noexcept;

  std::size_t levels() const noexcept { return ab_.levels(); }
  std::uint64_t total() const noexcept { return total_; }
  std::uint64_t retained() const noexcept { return ab_.total(); }
  const JointPmf& ab() const noexcept { return ab_; }
  const JointPmf& ae() const noexcept { return ae_; }
  const JointPmf& be() const noexcept { return be_; }
  const JointPmf& ae_raw() const noexcept { return ae_raw_; }
  const JointPmf& be_raw() const noexcept { return be_raw_; }

 private:
  JointPmf ab_, ae_, be_, ae_raw_, be_raw_;
  std::uint64_t total_ = 0;
};

// Eve's information is taken from whichever of her two strategies (apply or
// ignore the public correction) gives the larger min(i_ae, i_be).
// Throws NoRetainedSamples.
MetricsReport csk_lower(const SymbolCounts& counts, const SchemeSpec& scheme);
MetricsReport csk_lower(const JointPmf& ab, const JointPmf& ae, const JointPmf& be, const JointPmf& ae_raw,
                        const JointPmf& be_raw, const SchemeSpec& scheme, std::uint64_t total);
MetricsReport csk_lower(std::span<const ProtocolOutcome> outcomes, const SchemeSpec& scheme);

// Public-channel cost of ADQC relative to NEC:
// (1 + beta - c_ab_adqc) / (1 - c_ab_nec). Throws DegenerateDenominator when
// c_ab_nec >= 1 - 1e-9.
double gamma_cost(double c_ab_adqc, double c_ab_nec, double beta);

inline constexpr const char* kMetricsCsvHeader =
    "scheme,b,B,rho_ab,i_ab,i_ae,i_be,c_sk_low,c_ab,beta,gamma,retention,n,seed";

std::string metrics_csv_row(const std::string& scheme_label, const SchemeSpec& scheme, double rho_ab,
                            const MetricsReport& report, std::uint64_t n, std::uint64_t seed);

}  // namespace adqc
