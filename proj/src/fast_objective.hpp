#pragma once

// Sort-based evaluators of the key-rate objective when two of the three
// quantizers are held fixed. Samples are pre-sorted by the free party's
// measurement so that each evaluation reduces to range counting; symbols at
// split points are computed with the same per-sample functions as the
// protocol runners, so the counts match a direct run exactly.

#include <cstdint>
#include <vector>

#include "adqc/gaussian_source.hpp"
#include "adqc/info_metrics.hpp"
#include "adqc/protocols.hpp"
#include "adqc/quantizer.hpp"

namespace adqc::detail {

// Per-label counts over prefixes of a label sequence, stored every `stride`
// positions.
class RangeCounts {
 public:
  RangeCounts() = default;
  RangeCounts(std::vector<std::uint16_t> labels, std::size_t alphabet, std::size_t stride);

  // out[v] += #{i in [lo, hi) : label[i] == v}
  void add_range(std::size_t lo, std::size_t hi, std::uint64_t* out) const;

 private:
  std::vector<std::uint16_t> labels_;
  std::size_t alphabet_ = 0;
  std::size_t stride_ = 1;
  std::vector<std::uint32_t> checkpoints_;
};

// Sample indices sorted by each coordinate; shared by the evaluators built
// during one search.
struct SortedOrders {
  explicit SortedOrders(const Dataset& ds);
  std::vector<std::uint32_t> by_x, by_y, by_z;
  std::vector<TriSample> x_sorted;  // samples in by_x order
};

// True when the sort-based evaluators handle the scheme.
bool fast_path_supported(const SchemeSpec& scheme);

// Free quantizer: Eve's.
class EveObjective {
 public:
  EveObjective(const SchemeSpec& scheme, const Dataset& ds, const SortedOrders& sorted, const Quantizer& qa,
               const Quantizer& qb, const AdqcOptions& opts);
  double operator()(const Quantizer& qe);

 private:
  SchemeSpec scheme_;
  AdqcOptions opts_;
  std::size_t levels_;
  std::uint64_t total_;
  std::vector<double> keys_;
  std::vector<std::size_t> group_begin_;
  RangeCounts a_, b_;
  JointPmf ab_, ae_, be_, ae_raw_, be_raw_;
  std::vector<std::uint64_t> scratch_;
};

// Free quantizer: Bob's.
class BobObjective {
 public:
  BobObjective(const SchemeSpec& scheme, const Dataset& ds, const SortedOrders& sorted, const Quantizer& qa,
               const Quantizer& qe, const AdqcOptions& opts);
  double operator()(const Quantizer& qb);

 private:
  SchemeSpec scheme_;
  AdqcOptions opts_;
  std::size_t levels_;
  std::uint64_t total_;
  std::vector<double> keys_;
  std::vector<std::size_t> group_begin_;
  RangeCounts a_, e_, e_raw_;
  JointPmf ab_, ae_, be_, ae_raw_, be_raw_;
  std::vector<std::uint64_t> scratch_;
};

// Free quantizer: Alice's. Bob's and Eve's symbols are precomputed for every
// possible correction index.
class AliceObjective {
 public:
  AliceObjective(const SchemeSpec& scheme, const Dataset& ds, const SortedOrders& sorted, const Quantizer& qb,
                 const Quantizer& qe, const AdqcOptions& opts);
  double operator()(const Quantizer& qa);

 private:
  void add_piece(std::size_t a, std::size_t lo, std::size_t hi, int xi);

  SchemeSpec scheme_;
  std::size_t levels_;
  std::uint64_t total_;
  std::vector<double> keys_;
  std::vector<RangeCounts> joint_be_;   // per xi, label b * M + e
  std::vector<RangeCounts> joint_ber_;  // per xi, label b * M + e_raw (ADQC only)
  JointPmf ab_, ae_, be_, ae_raw_, be_raw_;
  std::vector<std::uint64_t> scratch_;
};

}  // namespace adqc::detail
