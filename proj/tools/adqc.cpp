// adqc: key-rate experiments for quantization-based secret key agreement.

#include <fstream>
#include <iostream>
#include <memory>
#include <thread>

#include "CLI11.hpp"
#include "adqc/error.hpp"
#include "adqc/experiment.hpp"

using namespace adqc;

namespace {

enum Exit { kOk = 0, kValidation = 1, kRuntime = 2, kPartial = 3 };

struct Options {
  std::string rho_ab;
  std::vector<int> b;
  std::vector<int> B;
  std::string scheme;
  double guard = 0.85;
  double rho_ae = 0.8;
  double rho_be = 0.8;
  std::uint64_t n_design = 200000;
  std::uint64_t n_eval = 1000000;
  std::uint64_t seed = 1;
  std::string out;
  int jobs = 0;
  int max_outer_iters = 10;
  double tolerance = 1e-3;
  int budget = 2000;
  int restarts = 3;
  std::uint64_t n = 10;
  std::string save = "quantizers";
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--rho-ab", o.rho_ab, "rho_AB grid: start:stop:count or a comma list");
  cmd->add_option("--b", o.b, "quantizer bits (list)")->delimiter(',');
  cmd->add_option("--B", o.B, "correction bits for ADQC (list)")->delimiter(',');
  cmd->add_option("--scheme", o.scheme, "nec, adqc, gb, each optionally suffixed -opt (list)");
  cmd->add_option("--guard", o.guard, "guard band width")->capture_default_str();
  cmd->add_option("--rho-ae", o.rho_ae, "Alice-Eve correlation")->capture_default_str();
  cmd->add_option("--rho-be", o.rho_be, "Bob-Eve correlation")->capture_default_str();
  cmd->add_option("--n-design", o.n_design, "samples in each design dataset")->capture_default_str();
  cmd->add_option("--n-eval", o.n_eval, "samples in each evaluation dataset")->capture_default_str();
  cmd->add_option("--seed", o.seed, "base seed")->capture_default_str();
  cmd->add_option("--out", o.out, "output file (default: standard output)");
}

void add_optimizer(CLI::App* cmd, Options& o) {
  cmd->add_option("--max-outer-iters", o.max_outer_iters, "alternation rounds")->capture_default_str();
  cmd->add_option("--tolerance", o.tolerance, "objective change that ends the alternation")->capture_default_str();
  cmd->add_option("--budget", o.budget, "evaluations per simplex search")->capture_default_str();
  cmd->add_option("--restarts", o.restarts, "simplex restarts per search")->capture_default_str();
  cmd->add_option("--jobs", o.jobs, "worker threads (default: hardware threads)");
}

ExperimentPlan make_plan(const Options& o, const std::vector<double>& default_grid, std::string_view default_schemes,
                         std::vector<int> default_b, std::vector<int> default_B) {
  ExperimentPlan plan;
  plan.rho_ab = o.rho_ab.empty() ? default_grid : parse_grid(o.rho_ab);
  plan.schemes = parse_schemes(o.scheme.empty() ? default_schemes : std::string_view(o.scheme),
                               o.b.empty() ? default_b : o.b, o.B.empty() ? default_B : o.B, o.guard);
  plan.rho_ae = o.rho_ae;
  plan.rho_be = o.rho_be;
  plan.n_design = o.n_design;
  plan.n_eval = o.n_eval;
  plan.seed = o.seed;
  plan.max_outer_iters = o.max_outer_iters;
  plan.objective_tolerance = o.tolerance;
  plan.budget = o.budget;
  plan.restarts = o.restarts;
  plan.jobs = o.jobs > 0 ? o.jobs : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  plan.validate();
  return plan;
}

// Output stream for --out, or standard output.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_ = std::make_unique<std::ofstream>(path);
    if (!*file_) throw Error(Errc::Io, "cannot open " + path);
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }
  void close(const std::string& path) {
    if (!file_) return std::cout.flush(), void();
    file_->close();
    if (!*file_) throw Error(Errc::Io, "cannot write " + path);
  }

 private:
  std::unique_ptr<std::ofstream> file_;
};

int finish(const CommandReport& report) {
  for (const auto& f : report.failures) std::cerr << "failed: " << f << '\n';
  return report.failures.empty() ? kOk : kPartial;
}

int exit_code(const Error& e) {
  switch (e.code()) {
    case Errc::Io:
    case Errc::NoRetainedSamples:
    case Errc::EmptyInput:
    case Errc::DegenerateDenominator:
      return kRuntime;
    default:
      return kValidation;
  }
}

// Single scheme for trace and optimize.
SchemeEntry single_scheme(const Options& o, Design design) {
  const auto entries = parse_schemes(o.scheme.empty() ? "nec" : o.scheme, o.b.empty() ? std::vector{3} : o.b,
                                     o.B.empty() ? std::vector{1} : o.B, o.guard);
  if (entries.size() != 1) throw Error(Errc::InvalidPlan, "exactly one scheme, b and B expected");
  auto e = entries.front();
  if (design == Design::Optimized) e.design = Design::Optimized;
  return e;
}

double single_rho(const Options& o, double fallback) {
  if (o.rho_ab.empty()) return fallback;
  const auto g = parse_grid(o.rho_ab);
  if (g.size() != 1) throw Error(Errc::InvalidPlan, "exactly one rho_ab value expected");
  return g.front();
}

void write_quantizer(const std::string& path, const ThresholdVector& t) {
  std::ofstream f(path);
  f << t.quantizer().serialize();
  if (!f) throw Error(Errc::Io, "cannot write " + path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Key-rate experiments for quantization-based secret key agreement"};
  app.require_subcommand(1);
  // Shared options live on the top-level app and may follow the subcommand.
  app.fallthrough();
  Options o;

  auto* sweep = app.add_subcommand("sweep", "key-rate lower bound of each scheme over a rho_AB grid");
  auto* table = app.add_subcommand("table", "optimized ADQC over a (b, rho_AB) grid");
  auto* gamma = app.add_subcommand("gamma", "public-channel cost of ADQC relative to NEC");
  auto* trace = app.add_subcommand("trace", "per-sample protocol trace with baseline quantizers");
  auto* optimize = app.add_subcommand("optimize", "run the quantizer alternation for one point");
  app.set_config("--config", "", "key = value configuration file; command-line flags take precedence");
  add_common(&app, o);
  add_optimizer(&app, o);
  trace->add_option("--n", o.n, "number of samples (at most 10000)")->capture_default_str();
  optimize->add_option("--save", o.save, "prefix of the three quantizer files")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kValidation;
  }

  try {
    Sink sink(o.out);
    int code = kOk;
    if (sweep->parsed()) {
      ExperimentRunner runner(make_plan(o, sweep_grid(), "nec,nec-opt,adqc-opt,gb", {3}, {1, 2}));
      code = finish(cmd_sweep(runner, sink.stream()));
    } else if (table->parsed()) {
      ExperimentRunner runner(make_plan(o, table_grid(), "adqc-opt", {2, 3, 4}, {2}));
      code = finish(cmd_table(runner, sink.stream()));
    } else if (gamma->parsed()) {
      ExperimentRunner runner(make_plan(o, sweep_grid(), "adqc-opt", {2, 3, 4}, {1, 2}));
      code = finish(cmd_gamma(runner, sink.stream()));
    } else if (trace->parsed()) {
      cmd_trace(single_scheme(o, Design::Uniform).spec, single_rho(o, 0.9), o.n, o.seed, sink.stream(), o.rho_ae,
                o.rho_be);
    } else if (optimize->parsed()) {
      const auto entry = single_scheme(o, Design::Optimized);
      const double rho = single_rho(o, 0.96);
      ExperimentPlan plan = make_plan(o, {rho}, "nec-opt", {3}, {1});
      plan.schemes = {entry};
      const auto result = cmd_optimize(entry, rho, plan, sink.stream());
      write_quantizer(o.save + ".alice.txt", result.point.ta);
      write_quantizer(o.save + ".bob.txt", result.point.tb);
      write_quantizer(o.save + ".eve.txt", result.point.te);
      std::cerr << "design objective " << result.point.design_objective << ", evaluation c_sk_low "
                << result.point.report.c_sk_low << " (i_ab " << result.point.report.i_ab << ")\n";
    }
    sink.close(o.out);
    return code;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
}
