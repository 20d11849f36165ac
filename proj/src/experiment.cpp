#include "adqc/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <sstream>
#include <thread>

#include "adqc/error.hpp"
#include "adqc/philox.hpp"

namespace adqc {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <class T>
T parse_number(std::string_view text, const char* what) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end || text.empty())
    throw Error(Errc::Parse, std::string("bad ") + what + ": '" + std::string(text) + "'");
  return value;
}

std::string shortest(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

// FNV-1a, 64 bit.
std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string cache_key(const SchemeEntry& e, double rho) {
  return e.label() + '|' + std::to_string(e.spec.bits) + '|' + std::to_string(e.spec.correction()) + '|' +
         shortest(e.spec.guard_width.value_or(0.0)) + '|' + shortest(rho);
}

// Starting (and uniform-design) quantizer: the uniform grid for guard bands,
// whose guards would swallow the narrower baseline intervals, else the baseline.
Quantizer start_quantizer(const SchemeSpec& s) {
  return s.kind == SchemeKind::GB ? Quantizer::uniform(s.bits) : Quantizer::baseline(s.bits);
}

struct DesignedQuantizers {
  AlternationResult alternation;
  HalfStep secured;  // Eve step with the highest objective, incl. a closing one
};

DesignedQuantizers design_quantizers(const SchemeEntry& entry, const Dataset& design, const ExperimentPlan& plan,
                                     const HalfStepObserver& observer) {
  const auto cfg = plan.optimizer_config(entry.spec);
  const auto start = ThresholdVector::of(start_quantizer(entry.spec));
  DesignedQuantizers d{alternate(design, cfg, start, start, start, observer), {}};
  const auto& alt = d.alternation;

  auto closing_cfg = cfg;
  closing_cfg.search.seed = mix64(cfg.search.seed ^ 0xc105eULL);
  const auto closing = optimize_eve(alt.ta, alt.tb, alt.te, design, closing_cfg);
  d.secured = {static_cast<int>(alt.history.size() / 2), Party::Eve, closing.objective, closing.evaluations,
               alt.ta, alt.tb, closing.te};
  if (observer) observer(d.secured);
  for (const auto& h : alt.history)
    if (h.party == Party::Eve && h.objective > d.secured.objective) d.secured = h;
  return d;
}

Dataset make_dataset(const ExperimentPlan& plan, double rho, DatasetRole role) {
  const std::uint64_t n = role == DatasetRole::Design ? plan.n_design : plan.n_eval;
  return sample_dataset({rho, plan.rho_ae, plan.rho_be}, n, point_seed(plan.seed, rho, role));
}

void write_row(std::ostream& out, const PointResult& r, const ExperimentPlan& plan) {
  out << metrics_csv_row(r.scheme.label(), r.scheme.spec, r.rho_ab, r.report, plan.n_eval, plan.seed) << '\n';
}

std::string failure_line(const PointResult& r) {
  return r.scheme.label() + " b=" + std::to_string(r.scheme.spec.bits) + " B=" +
         std::to_string(r.scheme.spec.correction()) + " rho_ab=" + shortest(r.rho_ab) + ": " + r.error.value_or("");
}

// Scheme-major, rho-minor rows from a rho-major grid of results.
CommandReport emit(const std::vector<std::vector<PointResult>>& grid, std::size_t schemes, std::ostream& out,
                   const ExperimentPlan& plan) {
  CommandReport report;
  for (std::size_t s = 0; s < schemes; ++s) {
    for (const auto& point : grid) {
      const auto& r = point[s];
      if (r.error) {
        report.failures.push_back(failure_line(r));
        continue;
      }
      write_row(out, r, plan);
      report.rows.push_back(r);
    }
  }
  return report;
}

}  // namespace

std::vector<double> sweep_grid() {
  return {0.8, 0.82, 0.84, 0.86, 0.88, 0.9, 0.92, 0.94, 0.96, 0.97, 0.975, 0.98, 0.985, 0.99, 0.995, 0.999};
}

std::vector<double> table_grid() { return {0.8, 0.84, 0.88, 0.9, 0.92, 0.94, 0.96, 0.98, 0.99, 0.995}; }

std::vector<double> parse_grid(std::string_view text) {
  const auto t = trim(text);
  if (t.empty()) throw Error(Errc::Parse, "empty rho grid");
  if (t.find(':') != std::string::npos) {
    const auto parts = split(t, ':');
    if (parts.size() != 3) throw Error(Errc::Parse, "grid range must be start:stop:count");
    const auto start = parse_number<double>(parts[0], "grid start");
    const auto stop = parse_number<double>(parts[1], "grid stop");
    const auto count = parse_number<int>(parts[2], "grid count");
    if (count < 1) throw Error(Errc::Parse, "grid count must be >= 1");
    if (count == 1) return {start};
    std::vector<double> g;
    for (int i = 0; i < count; ++i) g.push_back(i + 1 == count ? stop : start + (stop - start) * i / (count - 1));
    return g;
  }
  std::vector<double> g;
  for (const auto& p : split(t, ',')) g.push_back(parse_number<double>(p, "grid value"));
  return g;
}

std::string SchemeEntry::label() const {
  std::string base(to_string(spec.kind));
  if (design == Design::Optimized) return base + "-opt";
  return spec.kind == SchemeKind::GB ? base : base + "-unif";
}

std::vector<SchemeEntry> parse_schemes(std::string_view names, const std::vector<int>& b, const std::vector<int>& B,
                                       double guard) {
  std::vector<SchemeEntry> out;
  for (const auto& raw : split(names, ',')) {
    std::string name = raw;
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
    if (name.empty()) continue;
    auto design = Design::Uniform;
    if (name.ends_with("-opt")) {
      design = Design::Optimized;
      name.resize(name.size() - 4);
    } else if (name.ends_with("-unif")) {
      name.resize(name.size() - 5);
    }
    for (int bits : b) {
      if (name == "nec") {
        out.push_back({SchemeSpec::nec(bits), design});
      } else if (name == "gb") {
        out.push_back({SchemeSpec::gb(bits, guard), design});
      } else if (name == "adqc") {
        for (int corr : B) out.push_back({SchemeSpec::adqc(bits, corr), design});
      } else {
        throw Error(Errc::Parse, "unknown scheme '" + raw + "' (expected nec, adqc or gb, optionally -opt)");
      }
    }
  }
  return out;
}

void ExperimentPlan::validate() const {
  if (schemes.empty()) throw Error(Errc::NoSchemes, "the plan has no schemes");
  for (const auto& s : schemes) s.spec.validate();
  if (rho_ab.empty()) throw Error(Errc::InvalidPlan, "empty rho_ab grid");
  for (double r : rho_ab) validate_config({r, rho_ae, rho_be});
  if (n_design == 0 || n_eval == 0) throw Error(Errc::InvalidSampleCount, "n_design and n_eval must be >= 1");
  if (max_outer_iters < 1) throw Error(Errc::InvalidPlan, "max_outer_iters must be >= 1");
  if (budget < 1) throw Error(Errc::InvalidPlan, "budget must be >= 1");
  if (restarts < 1) throw Error(Errc::InvalidPlan, "restarts must be >= 1");
  if (!(objective_tolerance > 0.0)) throw Error(Errc::InvalidPlan, "objective_tolerance must be positive");
  if (jobs < 1) throw Error(Errc::InvalidPlan, "jobs must be >= 1");
}

OptimizerConfig ExperimentPlan::optimizer_config(const SchemeSpec& scheme) const {
  OptimizerConfig cfg;
  cfg.scheme = scheme;
  cfg.max_outer_iters = max_outer_iters;
  cfg.objective_tolerance = objective_tolerance;
  cfg.search.max_evaluations = budget;
  cfg.search.restarts = restarts;
  cfg.search.seed = mix64(seed ^ 0x6f7074ULL);
  return cfg;
}

std::uint64_t ExperimentPlan::config_hash() const {
  std::ostringstream s;
  s << "rho_ab=";
  for (double r : rho_ab) s << shortest(r) << ';';
  s << "schemes=";
  for (const auto& e : schemes)
    s << e.label() << '/' << e.spec.bits << '/' << e.spec.correction() << '/'
      << shortest(e.spec.guard_width.value_or(0.0)) << ';';
  s << "rho_ae=" << shortest(rho_ae) << ";rho_be=" << shortest(rho_be) << ";n_design=" << n_design
    << ";n_eval=" << n_eval << ";seed=" << seed << ";outer=" << max_outer_iters
    << ";tol=" << shortest(objective_tolerance) << ";budget=" << budget << ";restarts=" << restarts;
  return fnv1a(s.str());
}

std::uint64_t point_seed(std::uint64_t base_seed, double rho_ab, DatasetRole role) {
  return mix64(mix64(base_seed ^ static_cast<std::uint64_t>(role)) ^ std::bit_cast<std::uint64_t>(rho_ab));
}

MetricsReport evaluate_scheme(const SchemeSpec& scheme, const Quantizer& qa, const Quantizer& qb, const Quantizer& qe,
                              const Dataset& ds, const AdqcOptions& opts) {
  scheme.validate();
  SymbolCounts counts(qa.levels());
  switch (scheme.kind) {
    case SchemeKind::NEC:
      for (const auto& s : ds.samples()) counts.add(nec_step(qa, qb, qe, s));
      break;
    case SchemeKind::ADQC:
      for (const auto& s : ds.samples()) counts.add(adqc_step(qa, qb, qe, s, scheme.correction(), opts));
      break;
    case SchemeKind::GB:
      check_guard(qa, *scheme.guard_width);
      for (const auto& s : ds.samples()) counts.add(gb_step(qa, qb, qe, s, *scheme.guard_width));
      break;
  }
  return csk_lower(counts, scheme);
}

PointResult evaluate_entry(const SchemeEntry& entry, double rho_ab, const Dataset& design, const Dataset& evaluation,
                           const ExperimentPlan& plan) {
  PointResult r{entry, rho_ab, {}, {}, {}, {}, 0.0, std::nullopt};
  if (entry.design == Design::Uniform) {
    const auto q = start_quantizer(entry.spec);
    r.ta = r.tb = r.te = ThresholdVector::of(q);
  } else {
    const auto d = design_quantizers(entry, design, plan, {});
    r.ta = d.secured.ta;
    r.tb = d.secured.tb;
    r.te = d.secured.te;
    r.design_objective = d.secured.objective;
  }
  r.report = evaluate_scheme(entry.spec, r.ta.quantizer(), r.tb.quantizer(), r.te.quantizer(), evaluation);
  return r;
}

ExperimentRunner::ExperimentRunner(ExperimentPlan plan) : plan_(std::move(plan)) { plan_.validate(); }

std::vector<PointResult> ExperimentRunner::run_point(double rho_ab, const std::vector<SchemeEntry>& schemes) {
  std::vector<PointResult> out(schemes.size());
  std::vector<std::size_t> todo;
  {
    std::lock_guard lock(mutex_);
    for (std::size_t i = 0; i < schemes.size(); ++i) {
      const auto it = cache_.find(cache_key(schemes[i], rho_ab));
      if (it != cache_.end())
        out[i] = it->second;
      else
        todo.push_back(i);
    }
  }
  if (todo.empty()) return out;

  std::optional<Dataset> design, evaluation;
  std::optional<std::string> data_error;
  try {
    evaluation.emplace(make_dataset(plan_, rho_ab, DatasetRole::Evaluation));
    const bool needs_design = std::any_of(todo.begin(), todo.end(), [&](std::size_t i) {
      return schemes[i].design == Design::Optimized;
    });
    if (needs_design) design.emplace(make_dataset(plan_, rho_ab, DatasetRole::Design));
  } catch (const std::exception& e) {
    data_error = e.what();
  }

  for (const auto i : todo) {
    if (data_error) {
      out[i] = {schemes[i], rho_ab, {}, {}, {}, {}, 0.0, data_error};
      continue;
    }
    try {
      out[i] = evaluate_entry(schemes[i], rho_ab, design ? *design : *evaluation, *evaluation, plan_);
    } catch (const std::exception& e) {
      out[i] = {schemes[i], rho_ab, {}, {}, {}, {}, 0.0, std::string(e.what())};
    }
  }

  std::lock_guard lock(mutex_);
  for (const auto i : todo) cache_.emplace(cache_key(schemes[i], rho_ab), out[i]);
  return out;
}

std::vector<std::vector<PointResult>> ExperimentRunner::run_grid(const std::vector<double>& rhos,
                                                                 const std::vector<SchemeEntry>& schemes) {
  std::vector<std::vector<PointResult>> results(rhos.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < rhos.size(); i = next++) results[i] = run_point(rhos[i], schemes);
  };
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(plan_.jobs), rhos.size());
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  return results;
}

void write_csv_preamble(std::ostream& out, std::string_view command, const ExperimentPlan& plan) {
  std::ostringstream hash;
  hash << std::hex << std::setw(16) << std::setfill('0') << plan.config_hash();
  out << "# generator: " << kGeneratorName << '\n'
      << "# command: " << command << '\n'
      << "# base_seed: " << plan.seed << '\n'
      << "# rho_ae: " << shortest(plan.rho_ae) << '\n'
      << "# rho_be: " << shortest(plan.rho_be) << '\n'
      << "# n_design: " << plan.n_design << '\n'
      << "# n_eval: " << plan.n_eval << '\n'
      << "# optimizer: max_outer_iters=" << plan.max_outer_iters
      << " objective_tolerance=" << shortest(plan.objective_tolerance) << " budget=" << plan.budget
      << " restarts=" << plan.restarts << '\n'
      << "# config_hash: " << hash.str() << '\n';
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  out << "# created: " << std::put_time(&utc, "%Y-%m-%dT%H:%M:%SZ") << '\n';
  out << kMetricsCsvHeader << '\n';
}

CommandReport cmd_sweep(ExperimentRunner& runner, std::ostream& out) {
  const auto& plan = runner.plan();
  write_csv_preamble(out, "sweep", plan);
  return emit(runner.run_grid(plan.rho_ab, plan.schemes), plan.schemes.size(), out, plan);
}

CommandReport cmd_table(ExperimentRunner& runner, std::ostream& out) {
  const auto& plan = runner.plan();
  std::vector<SchemeEntry> entries;
  for (const auto& e : plan.schemes) {
    SchemeEntry t{SchemeSpec::adqc(e.spec.bits, e.spec.kind == SchemeKind::ADQC ? e.spec.correction() : 2),
                  Design::Optimized};
    if (std::find(entries.begin(), entries.end(), t) == entries.end()) entries.push_back(t);
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const SchemeEntry& a, const SchemeEntry& b) { return a.spec.bits < b.spec.bits; });
  write_csv_preamble(out, "table", plan);
  return emit(runner.run_grid(plan.rho_ab, entries), entries.size(), out, plan);
}

CommandReport cmd_gamma(ExperimentRunner& runner, std::ostream& out) {
  const auto& plan = runner.plan();
  std::vector<SchemeEntry> adqc, nec;
  for (const auto& e : plan.schemes) {
    if (e.spec.kind != SchemeKind::ADQC) continue;
    if (std::find(adqc.begin(), adqc.end(), e) == adqc.end()) adqc.push_back(e);
    const SchemeEntry counterpart{SchemeSpec::nec(e.spec.bits), e.design};
    if (std::find(nec.begin(), nec.end(), counterpart) == nec.end()) nec.push_back(counterpart);
  }
  if (adqc.empty()) throw Error(Errc::NoSchemes, "gamma needs at least one ADQC scheme");
  auto all = adqc;
  all.insert(all.end(), nec.begin(), nec.end());
  auto grid = runner.run_grid(plan.rho_ab, all);

  CommandReport report;
  for (auto& point : grid) {
    for (std::size_t i = 0; i < adqc.size(); ++i) {
      auto& r = point[i];
      if (r.error) continue;
      const auto it = std::find_if(point.begin() + static_cast<std::ptrdiff_t>(adqc.size()), point.end(),
                                   [&](const PointResult& p) {
                                     return p.scheme.spec.bits == r.scheme.spec.bits && p.scheme.design == r.scheme.design;
                                   });
      if (it->error) {
        r.error = "NEC reference failed: " + *it->error;
        continue;
      }
      try {
        r.report.gamma = gamma_cost(r.report.c_ab, it->report.c_ab, r.report.beta);
      } catch (const Error& e) {
        report.failures.push_back(failure_line({r.scheme, r.rho_ab, {}, {}, {}, {}, 0.0, std::string(e.what())}));
      }
    }
  }
  write_csv_preamble(out, "gamma", plan);
  auto rows = emit(grid, adqc.size(), out, plan);
  rows.failures.insert(rows.failures.end(), report.failures.begin(), report.failures.end());
  return rows;
}

void cmd_trace(const SchemeSpec& scheme, double rho_ab, std::uint64_t n, std::uint64_t seed, std::ostream& out,
               double rho_ae, double rho_be) {
  if (n < 1 || n > 10000) throw Error(Errc::InvalidSampleCount, "trace needs 1 <= n <= 10000");
  scheme.validate();
  const auto ds = sample_dataset({rho_ab, rho_ae, rho_be}, n, seed);
  const auto q = start_quantizer(scheme);
  const auto outcomes = run_scheme(scheme, q, q, q, ds);
  write_trace(out, ds, outcomes);
}

OptimizeOutcome cmd_optimize(const SchemeEntry& entry, double rho_ab, const ExperimentPlan& plan, std::ostream& log) {
  entry.spec.validate();
  const auto design = make_dataset(plan, rho_ab, DatasetRole::Design);
  const auto evaluation = make_dataset(plan, rho_ab, DatasetRole::Evaluation);
  const auto d = design_quantizers(entry, design, plan, [&](const HalfStep& h) { log << run_log_line(h) << '\n'; });
  OptimizeOutcome out{d.alternation, {entry, rho_ab, {}, d.secured.ta, d.secured.tb, d.secured.te,
                                      d.secured.objective, std::nullopt}};
  out.point.report = evaluate_scheme(entry.spec, out.point.ta.quantizer(), out.point.tb.quantizer(),
                                     out.point.te.quantizer(), evaluation);
  return out;
}

}  // namespace adqc
