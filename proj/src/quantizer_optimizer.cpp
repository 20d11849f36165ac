#include "adqc/quantizer_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <limits>
#include <sstream>

#include "adqc/error.hpp"
#include "adqc/philox.hpp"
#include "fast_objective.hpp"
#include "json.hpp"

namespace adqc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kCoordinateTolerance = 1e-5;

// Reusable histogram buffers for repeated objective evaluations on one dataset.
// Guards that swallow an interval make a point infeasible during search.
template <class F>
double or_infeasible(F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == Errc::GuardTooWide) return kInf;
    throw;
  }
}

class Evaluator {
 public:
  Evaluator(const SchemeSpec& scheme, const Dataset& ds, const AdqcOptions& adqc)
      : scheme_(scheme), ds_(ds), adqc_(adqc), counts_(std::size_t{1} << scheme.bits) {
    scheme_.validate();
  }

  double operator()(const Quantizer& qa, const Quantizer& qb, const Quantizer& qe) {
    counts_.clear();
    switch (scheme_.kind) {
      case SchemeKind::NEC:
        for (const auto& s : ds_.samples()) counts_.add(nec_step(qa, qb, qe, s));
        break;
      case SchemeKind::ADQC: {
        const int bits = *scheme_.correction_bits;
        for (const auto& s : ds_.samples()) counts_.add(adqc_step(qa, qb, qe, s, bits, adqc_));
        break;
      }
      case SchemeKind::GB: {
        const double w = *scheme_.guard_width;
        check_guard(qa, w);
        for (const auto& s : ds_.samples()) counts_.add(gb_step(qa, qb, qe, s, w));
        break;
      }
    }
    return csk_lower(counts_, scheme_).c_sk_low;
  }

 private:
  SchemeSpec scheme_;
  const Dataset& ds_;
  AdqcOptions adqc_;
  SymbolCounts counts_;
};

void require_feasible(const ThresholdVector& t, const OptimizerConfig& cfg, const char* who) {
  const std::size_t expected = (std::size_t{1} << cfg.scheme.bits) - 1;
  if (t.interior.size() != expected || !feasible(t, cfg.min_gap, cfg.t_min, cfg.t_max))
    throw Error(Errc::InvalidThresholds, std::string(who) + " thresholds are not a valid starting point");
}

const char* party_name(Party p) { return p == Party::Eve ? "eve" : "alice_bob"; }

}  // namespace

bool feasible(const ThresholdVector& t, double min_gap, double t_min, double t_max) {
  double previous = t_min;
  for (double v : t.interior) {
    if (!std::isfinite(v) || !(v - previous >= min_gap)) return false;
    previous = v;
  }
  return t_max - previous >= min_gap;
}

std::vector<double> to_search_coords(const ThresholdVector& t) {
  std::vector<double> c;
  c.reserve(t.interior.size());
  for (std::size_t i = 0; i < t.interior.size(); ++i)
    c.push_back(i == 0 ? t.interior[0] : std::log(t.interior[i] - t.interior[i - 1]));
  return c;
}

ThresholdVector from_search_coords(std::span<const double> coords) {
  ThresholdVector t;
  t.interior.reserve(coords.size());
  for (std::size_t i = 0; i < coords.size(); ++i)
    t.interior.push_back(i == 0 ? coords[0] : t.interior.back() + std::exp(coords[i]));
  return t;
}

double objective(const ThresholdVector& ta, const ThresholdVector& tb, const ThresholdVector& te,
                 const SchemeSpec& scheme, const Dataset& ds, const AdqcOptions& adqc) {
  Evaluator eval(scheme, ds, adqc);
  return eval(ta.quantizer(), tb.quantizer(), te.quantizer());
}

namespace {

// Candidate starting points, deduplicated, first entry kept first.
std::vector<ThresholdVector> distinct(std::vector<ThresholdVector> starts, const OptimizerConfig& cfg) {
  std::vector<ThresholdVector> out;
  for (auto& t : starts)
    if (feasible(t, cfg.min_gap, cfg.t_min, cfg.t_max) && std::find(out.begin(), out.end(), t) == out.end())
      out.push_back(std::move(t));
  return out;
}

ThresholdVector baseline_thresholds(const OptimizerConfig& cfg) {
  return ThresholdVector::of(Quantizer::baseline(cfg.scheme.bits, kBaselineSpan, cfg.t_min, cfg.t_max));
}

// Minimizes g over one party's thresholds from each start in turn; the first
// start is the incumbent, so the result is never worse than it.
template <class G>
NelderMeadResult search_party(G&& g, const std::vector<ThresholdVector>& starts, const OptimizerConfig& cfg,
                              std::uint64_t seed) {
  const auto f = [&](std::span<const double> coords) {
    const auto t = from_search_coords(coords);
    if (!feasible(t, cfg.min_gap, cfg.t_min, cfg.t_max)) return kInf;
    return g(t.quantizer(cfg.t_min, cfg.t_max));
  };
  NelderMeadResult best;
  best.value = kInf;
  auto settings = cfg.search;
  for (std::size_t k = 0; k < starts.size(); ++k) {
    settings.seed = mix64(seed + k);
    auto r = nelder_mead(f, to_search_coords(starts[k]), settings);
    const int used = best.evaluations + r.evaluations;
    const bool exhausted = best.budget_exhausted || r.budget_exhausted;
    if (k == 0 || r.value < best.value) best = std::move(r);
    best.evaluations = used;
    best.budget_exhausted = exhausted;
  }
  return best;
}


// The sorted orders are built on first use and may be shared across steps on
// the same dataset.
using LazyOrders = std::optional<detail::SortedOrders>;

const detail::SortedOrders& orders_of(LazyOrders& cache, const Dataset& ds) {
  if (!cache) cache.emplace(ds);
  return *cache;
}

EveStep eve_step(const ThresholdVector& ta, const ThresholdVector& tb, const ThresholdVector& te_start,
                 const Dataset& ds, LazyOrders& orders, const OptimizerConfig& cfg) {
  const auto qa = ta.quantizer(cfg.t_min, cfg.t_max);
  const auto qb = tb.quantizer(cfg.t_min, cfg.t_max);
  const auto starts = distinct({te_start, tb, ta, baseline_thresholds(cfg)}, cfg);

  NelderMeadResult r;
  if (detail::fast_path_supported(cfg.scheme)) {
    detail::EveObjective eval(cfg.scheme, ds, orders_of(orders, ds), qa, qb, cfg.adqc);
    r = search_party(eval, starts, cfg, cfg.search.seed);
  } else {
    Evaluator eval(cfg.scheme, ds, cfg.adqc);
    r = search_party([&](const Quantizer& qe) { return or_infeasible([&] { return eval(qa, qb, qe); }); }, starts,
                     cfg, cfg.search.seed);
  }
  return {from_search_coords(r.x), r.value, r.evaluations, r.budget_exhausted};
}


// Alternating Alice-only and Bob-only searches until a round stops paying.
AliceBobStep coordinate_ascent(ThresholdVector ta, ThresholdVector tb, const Quantizer& qe, const Dataset& ds,
                               const detail::SortedOrders& sorted, const OptimizerConfig& cfg, std::uint64_t seed) {
  AliceBobStep out{ta, tb, objective(ta, tb, ThresholdVector::of(qe), cfg.scheme, ds, cfg.adqc), 1, false};
  for (int round = 0; round < cfg.coordinate_rounds; ++round) {
    const double before = out.objective;
    {
      detail::AliceObjective eval(cfg.scheme, ds, sorted, tb.quantizer(cfg.t_min, cfg.t_max), qe, cfg.adqc);
      const auto r = search_party([&](const Quantizer& q) { return -eval(q); }, {ta}, cfg,
                                  mix64(seed + 2 * static_cast<std::uint64_t>(round)));
      ta = from_search_coords(r.x);
      out.objective = -r.value;
      out.evaluations += r.evaluations;
      out.budget_exhausted = out.budget_exhausted || r.budget_exhausted;
    }
    {
      detail::BobObjective eval(cfg.scheme, ds, sorted, ta.quantizer(cfg.t_min, cfg.t_max), qe, cfg.adqc);
      const auto r = search_party([&](const Quantizer& q) { return -eval(q); }, {tb}, cfg,
                                  mix64(seed + 2 * static_cast<std::uint64_t>(round) + 1));
      tb = from_search_coords(r.x);
      out.objective = -r.value;
      out.evaluations += r.evaluations;
      out.budget_exhausted = out.budget_exhausted || r.budget_exhausted;
    }
    if (out.objective - before < kCoordinateTolerance) break;
  }
  out.ta = std::move(ta);
  out.tb = std::move(tb);
  return out;
}


AliceBobStep alice_bob_step(const ThresholdVector& ta_start, const ThresholdVector& tb_start, const ThresholdVector& te,
                            const Dataset& ds, LazyOrders& orders, const OptimizerConfig& cfg) {
  const auto qe = te.quantizer(cfg.t_min, cfg.t_max);

  if (detail::fast_path_supported(cfg.scheme)) {
    const auto base = baseline_thresholds(cfg);
    const auto& sorted = orders_of(orders, ds);
    const std::vector<std::pair<ThresholdVector, ThresholdVector>> starts = {
        {ta_start, tb_start}, {ta_start, ta_start}, {tb_start, tb_start}, {base, base}};
    std::optional<AliceBobStep> best;
    int evaluations = 0;
    bool exhausted = false;
    for (std::size_t k = 0; k < starts.size(); ++k) {
      const auto& [sa, sb] = starts[k];
      if (k > 0 && (!cfg.extra_starts || !feasible(sa, cfg.min_gap, cfg.t_min, cfg.t_max) ||
                    (sa == ta_start && sb == tb_start)))
        continue;
      auto r = coordinate_ascent(sa, sb, qe, ds, sorted, cfg, mix64(cfg.search.seed + 1000 * k));
      evaluations += r.evaluations;
      exhausted = exhausted || r.budget_exhausted;
      if (!best || r.objective > best->objective) best = std::move(r);
    }
    best->evaluations = evaluations;
    best->budget_exhausted = exhausted;
    return std::move(*best);
  }

  Evaluator eval(cfg.scheme, ds, cfg.adqc);
  const std::size_t half = ta_start.interior.size();
  const auto split = [half](std::span<const double> coords) {
    return std::pair{from_search_coords(coords.first(half)), from_search_coords(coords.subspan(half))};
  };
  const auto f = [&](std::span<const double> coords) {
    const auto [ta, tb] = split(coords);
    if (!feasible(ta, cfg.min_gap, cfg.t_min, cfg.t_max) || !feasible(tb, cfg.min_gap, cfg.t_min, cfg.t_max))
      return kInf;
    return or_infeasible([&] { return -eval(ta.quantizer(cfg.t_min, cfg.t_max), tb.quantizer(cfg.t_min, cfg.t_max), qe); });
  };
  auto start = to_search_coords(ta_start);
  const auto tb_coords = to_search_coords(tb_start);
  start.insert(start.end(), tb_coords.begin(), tb_coords.end());

  const auto r = nelder_mead(f, std::move(start), cfg.search);
  auto [ta, tb] = split(r.x);
  return {std::move(ta), std::move(tb), -r.value, r.evaluations, r.budget_exhausted};
}

}  // namespace

EveStep optimize_eve(const ThresholdVector& ta, const ThresholdVector& tb, const ThresholdVector& te_start,
                     const Dataset& ds, const OptimizerConfig& cfg) {
  require_feasible(ta, cfg, "Alice");
  require_feasible(tb, cfg, "Bob");
  require_feasible(te_start, cfg, "Eve");
  LazyOrders orders;
  return eve_step(ta, tb, te_start, ds, orders, cfg);
}

AliceBobStep optimize_alice_bob(const ThresholdVector& ta_start, const ThresholdVector& tb_start,
                                const ThresholdVector& te, const Dataset& ds, const OptimizerConfig& cfg) {
  require_feasible(ta_start, cfg, "Alice");
  require_feasible(tb_start, cfg, "Bob");
  require_feasible(te, cfg, "Eve");
  LazyOrders orders;
  return alice_bob_step(ta_start, tb_start, te, ds, orders, cfg);
}

AlternationResult alternate(const Dataset& design, const OptimizerConfig& cfg, const HalfStepObserver& observer) {
  const auto start = ThresholdVector::of(Quantizer::baseline(cfg.scheme.bits, kBaselineSpan, cfg.t_min, cfg.t_max));
  return alternate(design, cfg, start, start, start, observer);
}

AlternationResult alternate(const Dataset& design, const OptimizerConfig& cfg, ThresholdVector ta,
                            ThresholdVector tb, ThresholdVector te, const HalfStepObserver& observer) {
  if (cfg.max_outer_iters < 1) throw Error(Errc::InvalidPlan, "max_outer_iters must be >= 1");
  require_feasible(ta, cfg, "Alice");
  require_feasible(tb, cfg, "Bob");
  require_feasible(te, cfg, "Eve");

  AlternationResult out;
  out.initial_objective = objective(ta, tb, te, cfg.scheme, design, cfg.adqc);
  double previous = out.initial_objective;

  auto step_cfg = cfg;
  LazyOrders orders;
  const auto record = [&](int iter, Party party, double value, int evaluations) {
    out.history.push_back({iter, party, value, evaluations, ta, tb, te});
    if (observer) observer(out.history.back());
  };

  for (int iter = 0; iter < cfg.max_outer_iters; ++iter) {
    step_cfg.search.seed = mix64(cfg.search.seed ^ (2u * static_cast<std::uint64_t>(iter)));
    auto eve = eve_step(ta, tb, te, design, orders, step_cfg);
    te = std::move(eve.te);
    record(iter, Party::Eve, eve.objective, eve.evaluations);

    step_cfg.search.seed = mix64(cfg.search.seed ^ (2u * static_cast<std::uint64_t>(iter) + 1u));
    auto ab = alice_bob_step(ta, tb, te, design, orders, step_cfg);
    ta = std::move(ab.ta);
    tb = std::move(ab.tb);
    record(iter, Party::AliceBob, ab.objective, ab.evaluations);

    if (std::abs(ab.objective - previous) < cfg.objective_tolerance) {
      out.converged = true;
      break;
    }
    previous = ab.objective;
  }
  out.ta = std::move(ta);
  out.tb = std::move(tb);
  out.te = std::move(te);
  return out;
}

std::string run_log_line(const HalfStep& step) {
  const nlohmann::ordered_json line = {
      {"outer_iter", step.outer_iter}, {"half_step", party_name(step.party)},
      {"objective", step.objective},   {"evaluations", step.evaluations},
      {"ta", step.ta.interior},        {"tb", step.tb.interior},
      {"te", step.te.interior},
  };
  return line.dump(-1, ' ', false, nlohmann::json::error_handler_t::strict);
}

}  // namespace adqc
