#include "adqc/info_metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "adqc/error.hpp"

namespace adqc {

void JointPmf::merge(const JointPmf& other) {
  if (other.levels_ != levels_) throw Error(Errc::MismatchedSymbolSizes, "cannot merge pmfs of different size");
  for (std::size_t k = 0; k < counts_.size(); ++k) counts_[k] += other.counts_[k];
  total_ += other.total_;
}

void JointPmf::clear() noexcept {
  std::fill(counts_.begin(), counts_.end(), 0);
  total_ = 0;
}

std::vector<std::uint64_t> JointPmf::row_counts() const {
  std::vector<std::uint64_t> rows(levels_, 0);
  for (std::size_t i = 0; i < levels_; ++i)
    for (std::size_t j = 0; j < levels_; ++j) rows[i] += count(i, j);
  return rows;
}

std::vector<std::uint64_t> JointPmf::column_counts() const {
  std::vector<std::uint64_t> cols(levels_, 0);
  for (std::size_t i = 0; i < levels_; ++i)
    for (std::size_t j = 0; j < levels_; ++j) cols[j] += count(i, j);
  return cols;
}

JointPmf joint_pmf(std::span<const std::pair<int, int>> pairs, std::size_t levels) {
  if (pairs.empty()) throw Error(Errc::EmptyInput, "no symbol pairs");
  JointPmf p(levels);
  const auto in_range = [levels](int s) { return s >= 0 && static_cast<std::size_t>(s) < levels; };
  for (const auto& [a, b] : pairs) {
    if (!in_range(a) || !in_range(b))
      throw Error(Errc::SymbolOutOfRange,
                  "symbol pair (" + std::to_string(a) + ", " + std::to_string(b) + ") outside alphabet");
    p.add(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
  }
  return p;
}

double mutual_information(const JointPmf& p) {
  if (p.total() == 0) return 0.0;
  const auto rows = p.row_counts();
  const auto cols = p.column_counts();
  const double n = static_cast<double>(p.total());
  double sum = 0.0;
  for (std::size_t i = 0; i < p.levels(); ++i) {
    for (std::size_t j = 0; j < p.levels(); ++j) {
      const auto c = p.count(i, j);
      if (c == 0) continue;
      const double cij = static_cast<double>(c);
      sum += cij * std::log2(cij * n / (static_cast<double>(rows[i]) * static_cast<double>(cols[j])));
    }
  }
  return std::max(0.0, sum / n);
}

double entropy(std::span<const std::uint64_t> counts) {
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  if (total == 0) return 0.0;
  const double n = static_cast<double>(total);
  double h = 0.0;
  for (auto c : counts)
    if (c) h -= static_cast<double>(c) / n * std::log2(static_cast<double>(c) / n);
  return h;
}

SymbolCounts::SymbolCounts(std::size_t levels)
    : ab_(levels), ae_(levels), be_(levels), ae_raw_(levels), be_raw_(levels) {}

void SymbolCounts::merge(const SymbolCounts& other) {
  ab_.merge(other.ab_);
  ae_.merge(other.ae_);
  be_.merge(other.be_);
  ae_raw_.merge(other.ae_raw_);
  be_raw_.merge(other.be_raw_);
  total_ += other.total_;
}

void SymbolCounts::clear() noexcept {
  for (auto* p : {&ab_, &ae_, &be_, &ae_raw_, &be_raw_}) p->clear();
  total_ = 0;
}

MetricsReport csk_lower(const SymbolCounts& counts, const SchemeSpec& scheme) {
  return csk_lower(counts.ab(), counts.ae(), counts.be(), counts.ae_raw(), counts.be_raw(), scheme, counts.total());
}

MetricsReport csk_lower(const JointPmf& ab, const JointPmf& ae, const JointPmf& be, const JointPmf& ae_raw,
                        const JointPmf& be_raw, const SchemeSpec& scheme, std::uint64_t total) {
  if (ab.total() == 0) throw Error(Errc::NoRetainedSamples, "no retained samples to evaluate");
  MetricsReport r;
  r.i_ab = mutual_information(ab);
  r.i_ae = mutual_information(ae);
  r.i_be = mutual_information(be);
  if (scheme.kind == SchemeKind::ADQC) {
    const double i_ae_raw = mutual_information(ae_raw);
    const double i_be_raw = mutual_information(be_raw);
    if (std::min(i_ae_raw, i_be_raw) > std::min(r.i_ae, r.i_be)) {
      r.i_ae = i_ae_raw;
      r.i_be = i_be_raw;
      r.eve_mode = EveMode::Raw;
    }
  }
  r.c_sk_low = r.i_ab - std::min(r.i_ae, r.i_be);
  r.c_ab = r.i_ab / scheme.bits;
  r.beta = scheme.beta();
  r.total = total;
  r.retained = ab.total();
  r.retention = static_cast<double>(r.retained) / static_cast<double>(r.total);
  r.c_sk_low_rate = r.c_sk_low * r.retention;
  return r;
}

MetricsReport csk_lower(std::span<const ProtocolOutcome> outcomes, const SchemeSpec& scheme) {
  SymbolCounts counts(std::size_t{1} << scheme.bits);
  const auto levels = static_cast<int>(counts.levels());
  for (const auto& o : outcomes) {
    if (o.retained) {
      for (int s : {o.sym_a, o.sym_b, o.sym_e, o.sym_e_raw})
        if (s < 0 || s >= levels) throw Error(Errc::SymbolOutOfRange, "outcome symbol outside alphabet");
    }
    counts.add(o);
  }
  return csk_lower(counts, scheme);
}

double gamma_cost(double c_ab_adqc, double c_ab_nec, double beta) {
  if (c_ab_nec >= 1.0 - 1e-9)
    throw Error(Errc::DegenerateDenominator, "NEC agreement rate is 1; reconciliation cost is zero");
  if (!(c_ab_adqc >= 0.0 && c_ab_adqc <= 1.0 + 1e-9) || !(c_ab_nec >= 0.0) || !(beta >= 0.0))
    throw Error(Errc::InvalidRange, "gamma inputs must be non-negative rates");
  return (1.0 + beta - c_ab_adqc) / (1.0 - c_ab_nec);
}

std::string metrics_csv_row(const std::string& scheme_label, const SchemeSpec& scheme, double rho_ab,
                            const MetricsReport& r, std::uint64_t n, std::uint64_t seed) {
  // Shortest round-trip form of every real.
  const auto real = [](double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
  };
  std::ostringstream out;
  out << scheme_label << ',' << scheme.bits << ',' << scheme.correction() << ',' << real(rho_ab) << ','
      << real(r.i_ab) << ',' << real(r.i_ae) << ',' << real(r.i_be) << ',' << real(r.c_sk_low) << ','
      << real(r.c_ab) << ',' << real(r.beta) << ',';
  if (r.gamma) out << real(*r.gamma);
  out << ',' << real(r.retention) << ',' << n << ',' << seed;
  return out.str();
}

}  // namespace adqc
