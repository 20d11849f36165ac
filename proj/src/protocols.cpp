#include "adqc/protocols.hpp"

#include <iomanip>
#include <sstream>

#include "adqc/error.hpp"

namespace adqc {

namespace {

void check_sizes(const Quantizer& qa, const Quantizer& qb, const Quantizer& qe) {
  if (qa.bits() != qb.bits() || qa.bits() != qe.bits())
    throw Error(Errc::MismatchedSymbolSizes, "quantizers must share the same bits per symbol");
}

template <typename Step>
std::vector<ProtocolOutcome> map_samples(const Dataset& ds, Step&& step) {
  std::vector<ProtocolOutcome> out;
  out.reserve(ds.size());
  for (const auto& s : ds.samples()) out.push_back(step(s));
  return out;
}

}  // namespace

std::string_view to_string(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::NEC: return "NEC";
    case SchemeKind::ADQC: return "ADQC";
    case SchemeKind::GB: return "GB";
  }
  return "?";
}

void SchemeSpec::validate() const {
  if (bits < 1 || bits > kMaxBits) throw Error(Errc::BitsOutOfRange, "bits per symbol must be in [1, 16]");
  if (correction_bits.has_value() != (kind == SchemeKind::ADQC))
    throw Error(Errc::InvalidCorrectionBits, "correction bits are required for ADQC and only for ADQC");
  if (correction_bits && (*correction_bits < 1 || *correction_bits > kMaxBits))
    throw Error(Errc::InvalidCorrectionBits, "correction bits must be in [1, 16]");
  if (guard_width.has_value() != (kind == SchemeKind::GB))
    throw Error(Errc::GuardTooWide, "guard width is required for GB and only for GB");
  if (guard_width && !(*guard_width >= 0.0)) throw Error(Errc::GuardTooWide, "guard width must be >= 0");
}

void check_guard(const Quantizer& qa, double guard_width) {
  if (!(guard_width >= 0.0)) throw Error(Errc::GuardTooWide, "guard width must be >= 0");
  const auto b = qa.boundaries();
  const std::size_t m = qa.levels();
  for (std::size_t i = 0; i < m; ++i) {
    // Edge intervals lose one half-guard, inner intervals lose two.
    const double lost = (i == 0 || i + 1 == m) ? 0.5 * guard_width : guard_width;
    if (!(b[i + 1] - b[i] - lost > 0.0)) {
      std::ostringstream msg;
      msg << "guard width " << guard_width << " leaves no data in interval " << i;
      throw Error(Errc::GuardTooWide, msg.str());
    }
  }
}

std::vector<ProtocolOutcome> run_nec(const Quantizer& qa, const Quantizer& qb, const Quantizer& qe,
                                     const Dataset& ds) {
  check_sizes(qa, qb, qe);
  return map_samples(ds, [&](const TriSample& s) { return nec_step(qa, qb, qe, s); });
}

std::vector<ProtocolOutcome> run_adqc(const Quantizer& qa, const Quantizer& qb, const Quantizer& qe,
                                      const Dataset& ds, int correction_bits, const AdqcOptions& opts) {
  check_sizes(qa, qb, qe);
  if (correction_bits < 1 || correction_bits > kMaxBits)
    throw Error(Errc::InvalidCorrectionBits, "correction bits must be in [1, 16]");
  return map_samples(ds, [&](const TriSample& s) { return adqc_step(qa, qb, qe, s, correction_bits, opts); });
}

std::vector<ProtocolOutcome> run_gb(const Quantizer& qa, const Quantizer& qb, const Quantizer& qe,
                                    double guard_width, const Dataset& ds) {
  check_sizes(qa, qb, qe);
  check_guard(qa, guard_width);
  return map_samples(ds, [&](const TriSample& s) { return gb_step(qa, qb, qe, s, guard_width); });
}

std::vector<ProtocolOutcome> run_gb(int bits, double guard_width, const Dataset& ds, double t_min, double t_max) {
  const auto grid = Quantizer::uniform(bits, t_min, t_max);
  return run_gb(grid, grid, grid, guard_width, ds);
}

std::vector<ProtocolOutcome> run_scheme(const SchemeSpec& scheme, const Quantizer& qa, const Quantizer& qb,
                                        const Quantizer& qe, const Dataset& ds, const AdqcOptions& opts) {
  scheme.validate();
  if (qa.bits() != scheme.bits) throw Error(Errc::MismatchedSymbolSizes, "quantizer bits differ from scheme bits");
  switch (scheme.kind) {
    case SchemeKind::NEC: return run_nec(qa, qb, qe, ds);
    case SchemeKind::ADQC: return run_adqc(qa, qb, qe, ds, *scheme.correction_bits, opts);
    case SchemeKind::GB: return run_gb(qa, qb, qe, *scheme.guard_width, ds);
  }
  return {};
}

void write_trace(std::ostream& out, const Dataset& ds, std::span<const ProtocolOutcome> outcomes) {
  if (outcomes.size() != ds.size()) throw Error(Errc::InvalidPlan, "trace needs one outcome per sample");
  std::ostringstream buf;
  buf << std::setprecision(17) << "x,y,z,sym_a,sym_b,sym_e,xi,retained\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& s = ds[i];
    const auto& o = outcomes[i];
    buf << s.x << ',' << s.y << ',' << s.z << ',';
    if (o.retained)
      buf << o.sym_a << ',' << o.sym_b << ',' << o.sym_e << ',';
    else
      buf << ",,,";
    if (o.xi) buf << o.xi->xi;
    buf << ',' << (o.retained ? "true" : "false") << '\n';
  }
  out << buf.str();
}

}  // namespace adqc
