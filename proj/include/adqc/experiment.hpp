#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "adqc/gaussian_source.hpp"
#include "adqc/info_metrics.hpp"
#include "adqc/protocols.hpp"
#include "adqc/quantizer_optimizer.hpp"

namespace adqc {

// rho_AB grid of the key-rate sweep: 0.8 to 0.96 in steps of 0.02, then
// denser towards 1.
std::vector<double> sweep_grid();
// rho_AB columns of the ADQC table.
std::vector<double> table_grid();

// "start:stop:count" (inclusive, evenly spaced) or a comma-separated list.
// Throws Parse.
std::vector<double> parse_grid(std::string_view text);

enum class Design { Uniform, Optimized };

struct SchemeEntry {
  SchemeSpec spec;
  Design design = Design::Uniform;

  // NEC-unif, NEC-opt, ADQC-unif, ADQC-opt, GB, GB-opt
  std::string label() const;
  friend bool operator==(const SchemeEntry&, const SchemeEntry&) = default;
};

// Names: nec, nec-opt, adqc, adqc-opt, gb, gb-opt (comma-separated). ADQC
// names expand over every correction size in B, all names over every b.
// Throws Parse.
std::vector<SchemeEntry> parse_schemes(std::string_view names, const std::vector<int>& b,
                                       const std::vector<int>& B, double guard);

struct ExperimentPlan {
  std::vector<double> rho_ab = sweep_grid();
  std::vector<SchemeEntry> schemes;
  double rho_ae = 0.8;
  double rho_be = 0.8;
  std::uint64_t n_design = 200000;
  std::uint64_t n_eval = 1000000;
  std::uint64_t seed = 1;
  int max_outer_iters = 10;
  double objective_tolerance = 1e-3;
  int budget = 2000;  // evaluations per simplex search
  int restarts = 3;
  int jobs = 1;       // worker threads across grid points

  // Throws NoSchemes, InvalidPlan, CorrelationOutOfRange and scheme errors.
  void validate() const;
  OptimizerConfig optimizer_config(const SchemeSpec& scheme) const;
  // Stable 64-bit hash of every field that affects results.
  std::uint64_t config_hash() const;
};

// Dataset seed of one grid point; every scheme at the same rho shares it.
enum class DatasetRole : std::uint64_t { Design = 0x64657369676eULL, Evaluation = 0x6576616cULL };
std::uint64_t point_seed(std::uint64_t base_seed, double rho_ab, DatasetRole role);

struct PointResult {
  SchemeEntry scheme;
  double rho_ab = 0.0;
  MetricsReport report;  // on the evaluation dataset
  ThresholdVector ta, tb, te;
  double design_objective = 0.0;  // secured value on the design dataset (optimized only)
  std::optional<std::string> error;
};

// Evaluates scheme entries on grid points with per-point datasets, memoizing
// results so several commands can share one run.
class ExperimentRunner {
 public:
  explicit ExperimentRunner(ExperimentPlan plan);

  const ExperimentPlan& plan() const noexcept { return plan_; }

  // Results in the order of `schemes`; a failing entry carries `error`.
  std::vector<PointResult> run_point(double rho_ab, const std::vector<SchemeEntry>& schemes);

  // Runs every (rho, schemes) job on plan().jobs workers; output order is
  // the job order.
  std::vector<std::vector<PointResult>> run_grid(const std::vector<double>& rhos,
                                                 const std::vector<SchemeEntry>& schemes);

 private:
  ExperimentPlan plan_;
  std::mutex mutex_;
  std::map<std::string, PointResult> cache_;
};

// Quantizers designed on `design` (optimized entries) or taken as the
// baseline, then evaluated on `evaluation`.
PointResult evaluate_entry(const SchemeEntry& entry, double rho_ab, const Dataset& design, const Dataset& evaluation,
                           const ExperimentPlan& plan);

// Streaming metrics of one scheme run.
MetricsReport evaluate_scheme(const SchemeSpec& scheme, const Quantizer& qa, const Quantizer& qb, const Quantizer& qe,
                              const Dataset& ds, const AdqcOptions& opts = {});

struct CommandReport {
  std::vector<PointResult> rows;
  std::vector<std::string> failures;  // one line per failed point
};

// `#` metadata lines; only the last ("# created: ...") varies between runs.
void write_csv_preamble(std::ostream& out, std::string_view command, const ExperimentPlan& plan);

// One row per (scheme, rho) in plan order.
CommandReport cmd_sweep(ExperimentRunner& runner, std::ostream& out);

// ADQC-opt rows for every (b, rho) of the plan, b-major.
CommandReport cmd_table(ExperimentRunner& runner, std::ostream& out);

// For every ADQC entry and rho: the ADQC-opt row with gamma against NEC-opt
// at the same b. A degenerate denominator leaves gamma empty and is listed in
// failures.
CommandReport cmd_gamma(ExperimentRunner& runner, std::ostream& out);

// Per-sample protocol trace with baseline quantizers (uniform grid for GB).
// Throws InvalidSampleCount unless 1 <= n <= 10^4.
void cmd_trace(const SchemeSpec& scheme, double rho_ab, std::uint64_t n, std::uint64_t seed, std::ostream& out,
               double rho_ae = 0.8, double rho_be = 0.8);

struct OptimizeOutcome {
  AlternationResult alternation;
  PointResult point;
};

// Runs the alternation for one optimized entry, streaming run-log lines.
OptimizeOutcome cmd_optimize(const SchemeEntry& entry, double rho_ab, const ExperimentPlan& plan,
                             std::ostream& log);

}  // namespace adqc
