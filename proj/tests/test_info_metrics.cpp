#include <cmath>
#include <random>
#include <vector>

#include "adqc/error.hpp"
#include "adqc/info_metrics.hpp"
#include "doctest.h"

using namespace adqc;

namespace {

// MI as H(A) + H(B) - H(A, B) in long double, from raw probabilities.
long double brute_force_mi(const std::vector<std::vector<long double>>& p) {
  const std::size_t m = p.size();
  std::vector<long double> ra(m, 0), cb(m, 0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      ra[i] += p[i][j];
      cb[j] += p[i][j];
    }
  auto h = [](long double v) { return v > 0 ? -v * std::log2(v) : 0.0L; };
  long double hab = 0, ha = 0, hb = 0;
  for (std::size_t i = 0; i < m; ++i) {
    ha += h(ra[i]);
    hb += h(cb[i]);
    for (std::size_t j = 0; j < m; ++j) hab += h(p[i][j]);
  }
  return ha + hb - hab;
}

JointPmf from_counts(const std::vector<std::vector<std::uint64_t>>& c) {
  JointPmf p(c.size());
  for (std::size_t i = 0; i < c.size(); ++i)
    for (std::size_t j = 0; j < c.size(); ++j) p.add(i, j, c[i][j]);
  return p;
}

std::vector<std::vector<long double>> normalise(const std::vector<std::vector<std::uint64_t>>& c) {
  long double total = 0;
  for (const auto& row : c)
    for (auto v : row) total += v;
  std::vector<std::vector<long double>> p(c.size(), std::vector<long double>(c.size()));
  for (std::size_t i = 0; i < c.size(); ++i)
    for (std::size_t j = 0; j < c.size(); ++j) p[i][j] = c[i][j] / total;
  return p;
}

}  // namespace

TEST_CASE("joint_pmf") {
  const std::vector<std::pair<int, int>> pairs{{0, 0}, {1, 1}};
  const auto p = joint_pmf(pairs, 2);
  CHECK(p.count(0, 0) == 1);
  CHECK(p.count(1, 1) == 1);
  CHECK(p.count(0, 1) == 0);
  CHECK(p.total() == 2);

  try {
    joint_pmf({}, 2);
    FAIL("expected EmptyInput");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::EmptyInput);
  }
  const std::vector<std::pair<int, int>> bad{{0, 2}};
  CHECK_THROWS_AS(joint_pmf(bad, 2), Error);
}

TEST_CASE("joint_pmf of independent uniform symbols") {
  const std::size_t m = 8, n = 1'000'000;
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> u(0, static_cast<int>(m) - 1);
  std::vector<std::pair<int, int>> pairs(n);
  for (auto& pr : pairs) pr = {u(rng), u(rng)};
  const auto p = joint_pmf(pairs, m);
  double worst = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) worst = std::max(worst, std::abs(p.probability(i, j) - 1.0 / (m * m)));
  CHECK(worst <= 5.0 * m / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("mutual_information closed forms") {
  CHECK(mutual_information(from_counts({{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}})) ==
        doctest::Approx(2.0).epsilon(1e-15));
  CHECK(mutual_information(from_counts({{1, 2}, {3, 6}})) == doctest::Approx(0.0).epsilon(1e-15));
  // 1 - H(0.2)
  const double expected = 1.0 + 0.2 * std::log2(0.2) + 0.8 * std::log2(0.8);
  const double mi = mutual_information(from_counts({{4, 1}, {1, 4}}));
  CHECK(mi == doctest::Approx(expected).epsilon(1e-14));
  CHECK(std::abs(mi - 0.278) < 5e-4);
  CHECK(mutual_information(JointPmf(4)) == 0.0);
}

TEST_CASE("mutual_information matches brute force on hand-built 4x4 pmfs") {
  const std::vector<std::vector<std::vector<std::uint64_t>>> cases{
      {{10, 2, 0, 1}, {3, 7, 2, 0}, {0, 1, 9, 4}, {1, 0, 5, 12}},
      {{1, 1, 1, 1}, {2, 2, 2, 2}, {3, 3, 3, 3}, {0, 0, 0, 0}},
      {{100, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 0, 37}, {0, 0, 5, 0}},
      {{17, 23, 5, 8}, {2, 90, 14, 3}, {6, 6, 6, 6}, {11, 0, 31, 77}},
  };
  for (const auto& c : cases) {
    const double mi = mutual_information(from_counts(c));
    CHECK(std::abs(mi - static_cast<double>(brute_force_mi(normalise(c)))) <= 1e-12);
  }
}

TEST_CASE("mutual information bounds over random pmfs") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = std::size_t{1} << (1 + trial % 4);
    std::uniform_int_distribution<int> u(0, 20);
    JointPmf p(m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) p.add(i, j, (u(rng) < 6) ? 0 : u(rng));
    if (p.total() == 0) continue;
    const double mi = mutual_information(p);
    const auto rows = p.row_counts();
    const auto cols = p.column_counts();
    CHECK(mi >= 0.0);
    CHECK(mi <= std::min(entropy(rows), entropy(cols)) + 1e-12);
    CHECK(mi <= std::log2(static_cast<double>(m)) + 1e-12);
  }
}

TEST_CASE("histogram merging is order independent") {
  JointPmf a(4), b(4), c(4);
  a.add(0, 1, 3);
  b.add(2, 2, 5);
  c.add(3, 0, 7);
  JointPmf ab_c = a;
  ab_c.merge(b);
  ab_c.merge(c);
  JointPmf c_ba = c;
  c_ba.merge(b);
  c_ba.merge(a);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) CHECK(ab_c.count(i, j) == c_ba.count(i, j));
  CHECK(ab_c.total() == 15);
  CHECK(mutual_information(ab_c) == mutual_information(c_ba));
  CHECK_THROWS_AS(a.merge(JointPmf(2)), Error);
}

TEST_CASE("csk_lower") {
  SUBCASE("perfect legitimate agreement, independent Eve") {
    const auto ds = sample_dataset({1.0, 0.0, 0.0}, 1'000'000, 1);
    const auto q = Quantizer::baseline(3);
    const auto r = csk_lower(run_nec(q, q, q, ds), SchemeSpec::nec(3));
    const auto counts = [&] {
      SymbolCounts c(8);
      for (const auto& o : run_nec(q, q, q, ds)) c.add(o);
      return c;
    }();
    CHECK(r.i_ab == doctest::Approx(entropy(counts.ab().row_counts())));
    CHECK(r.i_ae < 0.01);
    CHECK(r.c_sk_low == doctest::Approx(r.i_ab - std::min(r.i_ae, r.i_be)));
    CHECK(r.c_ab == doctest::Approx(r.i_ab / 3));
    CHECK(r.beta == 0.0);
    CHECK(r.retention == 1.0);
    // Uniform over [-6, 6] would give b bits; the Gaussian entropy of the
    // baseline cells is lower but must be close to 3 bits only for
    // equiprobable cells.
    CHECK(r.i_ab <= 3.0);
  }
  SUBCASE("Eve clones Alice: signed value, no clamp") {
    std::vector<ProtocolOutcome> out;
    for (int i = 0; i < 400; ++i) {
      const int a = i % 4, b = (i / 4) % 4;
      out.push_back({a, b, a, a, std::nullopt, true});
    }
    const auto r = csk_lower(out, SchemeSpec::nec(2));
    CHECK(r.i_ae == doctest::Approx(2.0));
    CHECK(r.c_sk_low == doctest::Approx(r.i_ab - r.i_be));
    CHECK(r.c_sk_low <= 0.0);
  }
  SUBCASE("retention and rate scaling") {
    std::vector<ProtocolOutcome> out{{0, 0, 1, 1, std::nullopt, true},
                                     {1, 1, 0, 0, std::nullopt, true},
                                     {.retained = false},
                                     {.retained = false}};
    const auto r = csk_lower(out, SchemeSpec::gb(1, 0.1));
    CHECK(r.retention == 0.5);
    CHECK(r.c_sk_low_rate == doctest::Approx(0.5 * r.c_sk_low));
  }
  SUBCASE("Eve strategy: the stronger of the two modes is reported") {
    std::vector<ProtocolOutcome> out;
    for (int i = 0; i < 64; ++i) {
      const int a = i % 2;
      out.push_back({a, a, 0, a, CorrectionIndex{1, 1}, true});  // raw Eve sees everything
    }
    const auto r = csk_lower(out, SchemeSpec::adqc(1, 1));
    CHECK(r.eve_mode == EveMode::Raw);
    CHECK(r.i_ae == doctest::Approx(1.0));
    CHECK(r.c_sk_low == doctest::Approx(0.0));
    CHECK(r.beta == 1.0);
  }
  SUBCASE("errors") {
    std::vector<ProtocolOutcome> none{{.retained = false}};
    CHECK_THROWS_AS(csk_lower(none, SchemeSpec::gb(1, 0.1)), Error);
    std::vector<ProtocolOutcome> bad{{5, 0, 0, 0, std::nullopt, true}};
    CHECK_THROWS_AS(csk_lower(bad, SchemeSpec::nec(1)), Error);
  }
}

TEST_CASE("gamma_cost") {
  CHECK(gamma_cost(0.4, 0.4, 0.0) == doctest::Approx(1.0));
  CHECK(gamma_cost(0.9, 0.5, 0.5) == doctest::Approx(1.2));
  try {
    gamma_cost(0.5, 1.0, 0.5);
    FAIL("expected DegenerateDenominator");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DegenerateDenominator);
  }
  // First form (n - k_adqc + beta n) / (n - k_nec) with k = n * C_AB equals the
  // closed form for any block length n.
  for (double n : {8.0, 96.0, 1e3, 12345.0}) {
    for (double beta : {0.0, 1.0 / 3.0, 0.5, 1.0}) {
      const double c_adqc = 0.71, c_nec = 0.43;
      const double k_adqc = n * c_adqc, k_nec = n * c_nec;
      CHECK(gamma_cost(c_adqc, c_nec, beta) ==
            doctest::Approx((n - k_adqc + beta * n) / (n - k_nec)).epsilon(1e-12));
    }
  }
}

TEST_CASE("metrics CSV row") {
  MetricsReport r;
  r.i_ab = 1.5;
  r.c_ab = 0.5;
  r.beta = 2.0 / 3.0;
  r.gamma = 1.25;
  const auto row = metrics_csv_row("ADQC-opt", SchemeSpec::adqc(3, 2), 0.96, r, 1000, 7);
  CHECK(row.rfind("ADQC-opt,3,2,0.96,1.5,", 0) == 0);
  CHECK(row.find(",1.25,1,1000,7") != std::string::npos);
  r.gamma.reset();
  CHECK(metrics_csv_row("NEC-unif", SchemeSpec::nec(3), 0.9, r, 10, 1).find(",,1,10,1") != std::string::npos);
}
