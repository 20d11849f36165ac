#include "adqc/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "adqc/philox.hpp"

namespace adqc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Vertex {
  std::vector<double> x;
  double f;
};

}  // namespace

NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f, std::vector<double> x0,
                             const NelderMeadSettings& settings) {
  const std::size_t n = x0.size();
  NelderMeadResult best;
  int evaluations = 0;
  auto eval = [&](const std::vector<double>& x) {
    ++evaluations;
    const double v = f(x);
    return std::isfinite(v) ? v : kInf;
  };

  best.x = x0;
  best.value = eval(x0);
  if (n == 0) {
    best.evaluations = evaluations;
    return best;
  }

  const double dn = static_cast<double>(n);
  // Adaptive coefficients; they reduce to the classic (1, 2, 1/2, 1/2) at n <= 2.
  const double da = std::max(dn, 2.0);
  const double alpha = 1.0;
  const double gamma = 1.0 + 2.0 / da;
  const double rho = 0.75 - 1.0 / (2.0 * da);
  const double sigma = 1.0 - 1.0 / da;

  std::uint64_t stream = mix64(settings.seed);
  for (int restart = 0; restart < std::max(1, settings.restarts); ++restart) {
    if (evaluations >= settings.max_evaluations) break;

    // Axis simplex around the incumbent; later restarts flip signs and
    // rescale the steps pseudo-randomly.
    std::vector<Vertex> simplex;
    simplex.push_back({best.x, best.value});
    for (std::size_t i = 0; i < n && evaluations < settings.max_evaluations; ++i) {
      double step = settings.initial_step;
      if (restart > 0) {
        stream = mix64(stream);
        const double scale = 0.5 + static_cast<double>(stream >> 11) * 0x1.0p-53;
        step *= ((stream & 1u) ? -1.0 : 1.0) * scale;
      }
      auto x = best.x;
      x[i] += step;
      simplex.push_back({x, eval(x)});
    }
    if (simplex.size() != n + 1) break;

    std::vector<double> centroid(n), trial(n);
    auto point = [&](double t) {
      // centroid + t * (centroid - worst)
      for (std::size_t i = 0; i < n; ++i) trial[i] = centroid[i] + t * (centroid[i] - simplex[n].x[i]);
      return trial;
    };

    while (evaluations < settings.max_evaluations) {
      std::stable_sort(simplex.begin(), simplex.end(), [](const Vertex& a, const Vertex& b) { return a.f < b.f; });

      const double spread = simplex[n].f - simplex[0].f;
      double size = 0.0;
      for (std::size_t k = 1; k <= n; ++k)
        for (std::size_t i = 0; i < n; ++i) size = std::max(size, std::abs(simplex[k].x[i] - simplex[0].x[i]));
      if (spread <= settings.f_tolerance && size <= settings.x_tolerance) break;

      std::fill(centroid.begin(), centroid.end(), 0.0);
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i) centroid[i] += simplex[k].x[i] / dn;

      const auto xr = point(alpha);
      const double fr = eval(xr);
      if (fr < simplex[0].f) {
        const auto xe = point(gamma);
        const double fe = evaluations < settings.max_evaluations ? eval(xe) : kInf;
        simplex[n] = fe < fr ? Vertex{xe, fe} : Vertex{xr, fr};
        continue;
      }
      if (fr < simplex[n - 1].f) {
        simplex[n] = {xr, fr};
        continue;
      }
      const bool outside = fr < simplex[n].f;
      const auto xc = point(outside ? alpha * rho : -rho);
      const double fc = evaluations < settings.max_evaluations ? eval(xc) : kInf;
      if ((outside && fc <= fr) || (!outside && fc < simplex[n].f)) {
        simplex[n] = {xc, fc};
        continue;
      }
      // Shrink toward the best vertex.
      for (std::size_t k = 1; k <= n && evaluations < settings.max_evaluations; ++k) {
        for (std::size_t i = 0; i < n; ++i)
          simplex[k].x[i] = simplex[0].x[i] + sigma * (simplex[k].x[i] - simplex[0].x[i]);
        simplex[k].f = eval(simplex[k].x);
      }
    }

    const auto it = std::min_element(simplex.begin(), simplex.end(),
                                     [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
    if (it->f < best.value) {
      best.x = it->x;
      best.value = it->f;
    }
  }
  best.evaluations = evaluations;
  best.budget_exhausted = evaluations >= settings.max_evaluations;
  return best;
}

}  // namespace adqc
