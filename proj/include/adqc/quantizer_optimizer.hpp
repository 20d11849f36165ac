#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "adqc/gaussian_source.hpp"
#include "adqc/info_metrics.hpp"
#include "adqc/nelder_mead.hpp"
#include "adqc/protocols.hpp"
#include "adqc/quantizer.hpp"

namespace adqc {

// The M - 1 interior thresholds of one party's quantizer; the saturation
// edges are fixed by the optimizer configuration.
struct ThresholdVector {
  std::vector<double> interior;

  static ThresholdVector of(const Quantizer& q) { return {{q.interior().begin(), q.interior().end()}}; }
  Quantizer quantizer(double t_min = -kSaturation, double t_max = kSaturation) const {
    return Quantizer::from_interior(interior, t_min, t_max);
  }

  friend bool operator==(const ThresholdVector&, const ThresholdVector&) = default;
};

// Strictly increasing with every gap (edges included) at least min_gap.
bool feasible(const ThresholdVector& t, double min_gap, double t_min = -kSaturation, double t_max = kSaturation);

// Unconstrained search coordinates (T_1, log(T_2 - T_1), ..., log(T_{M-1} - T_{M-2})).
std::vector<double> to_search_coords(const ThresholdVector& t);
ThresholdVector from_search_coords(std::span<const double> coords);

struct OptimizerConfig {
  SchemeSpec scheme = SchemeSpec::nec(3);
  int max_outer_iters = 10;
  double objective_tolerance = 1e-3;
  double min_gap = 1e-4;
  double t_min = -kSaturation;
  double t_max = kSaturation;
  NelderMeadSettings search;  // per simplex search
  AdqcOptions adqc;
  // Alice-Bob half-step: rounds of alternating Alice-only / Bob-only searches,
  // and whether to also start from (tA, tA), (tB, tB) and the baseline.
  int coordinate_rounds = 4;
  bool extra_starts = true;
};

// c_sk_low of the scheme run on ds with the three quantizers. Deterministic.
double objective(const ThresholdVector& ta, const ThresholdVector& tb, const ThresholdVector& te,
                 const SchemeSpec& scheme, const Dataset& ds, const AdqcOptions& adqc = {});

struct EveStep {
  ThresholdVector te;
  double objective = 0.0;
  int evaluations = 0;
  bool budget_exhausted = false;  // result is still the best point found
};

struct AliceBobStep {
  ThresholdVector ta;
  ThresholdVector tb;
  double objective = 0.0;
  int evaluations = 0;
  bool budget_exhausted = false;
};

// Eve's best response: minimizes the objective over te with ta, tb fixed.
// The returned objective is never above the one at te_start.
EveStep optimize_eve(const ThresholdVector& ta, const ThresholdVector& tb, const ThresholdVector& te_start,
                     const Dataset& ds, const OptimizerConfig& cfg);

// Alice and Bob jointly maximize over (ta, tb) with te fixed; never below the
// objective at the start.
AliceBobStep optimize_alice_bob(const ThresholdVector& ta_start, const ThresholdVector& tb_start,
                                const ThresholdVector& te, const Dataset& ds, const OptimizerConfig& cfg);

enum class Party { Eve, AliceBob };

struct HalfStep {
  int outer_iter = 0;
  Party party = Party::Eve;
  double objective = 0.0;
  int evaluations = 0;
  ThresholdVector ta, tb, te;
};

struct AlternationResult {
  ThresholdVector ta, tb, te;
  double initial_objective = 0.0;
  std::vector<HalfStep> history;
  bool converged = false;
};

using HalfStepObserver = std::function<void(const HalfStep&)>;

// Starting from the baseline quantizers, alternates Eve and Alice-Bob
// half-steps until the objective moves less than objective_tolerance over a
// full outer iteration, or max_outer_iters is reached.
AlternationResult alternate(const Dataset& design, const OptimizerConfig& cfg, const HalfStepObserver& observer = {});

// Same, from explicit starting thresholds.
AlternationResult alternate(const Dataset& design, const OptimizerConfig& cfg, ThresholdVector ta,
                            ThresholdVector tb, ThresholdVector te, const HalfStepObserver& observer = {});

// One JSON object per line: outer_iter, half_step, objective, thresholds.
std::string run_log_line(const HalfStep& step);

}  // namespace adqc
