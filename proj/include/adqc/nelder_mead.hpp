#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace adqc {

struct NelderMeadSettings {
  int max_evaluations = 2000;
  int restarts = 3;             // simplex rebuilds around the incumbent
  double initial_step = 0.25;
  double f_tolerance = 1e-7;    // spread of simplex values
  double x_tolerance = 1e-6;    // largest vertex distance from the best vertex
  std::uint64_t seed = 1;       // orientation of restart simplices
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  int evaluations = 0;
  bool budget_exhausted = false;
};

// Minimizes f with the adaptive-coefficient Nelder-Mead simplex method
// (Gao & Han 2012). Non-finite values (e.g. infeasible points) are treated as
// +inf. Never returns a point worse than x0.
NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f, std::vector<double> x0,
                             const NelderMeadSettings& settings);

}  // namespace adqc
