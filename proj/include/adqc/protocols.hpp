#pragma once

#include <cmath>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adqc/gaussian_source.hpp"
#include "adqc/quantizer.hpp"

namespace adqc {

enum class SchemeKind { NEC, ADQC, GB };

std::string_view to_string(SchemeKind kind);

struct SchemeSpec {
  SchemeKind kind = SchemeKind::NEC;
  int bits = 3;
  std::optional<int> correction_bits;  // ADQC only
  std::optional<double> guard_width;   // GB only

  static SchemeSpec nec(int bits) { return {SchemeKind::NEC, bits, std::nullopt, std::nullopt}; }
  static SchemeSpec adqc(int bits, int correction_bits) {
    return {SchemeKind::ADQC, bits, correction_bits, std::nullopt};
  }
  static SchemeSpec gb(int bits, double guard_width) { return {SchemeKind::GB, bits, std::nullopt, guard_width}; }

  // Throws BitsOutOfRange, InvalidCorrectionBits or GuardTooWide.
  void validate() const;

  int correction() const noexcept { return correction_bits.value_or(0); }
  double beta() const noexcept { return static_cast<double>(correction()) / bits; }

  friend bool operator==(const SchemeSpec&, const SchemeSpec&) = default;
};

struct AdqcOptions {
  Reconstruction reconstruction = Reconstruction::Midpoint;
  // Shift the corrected value by half the receiver's interval so the decision
  // is taken around the interval midpoint instead of its lower edge.
  bool recenter = true;
};

inline constexpr int kNoSymbol = -1;

// Symbols are kNoSymbol when the sample was discarded (GB only). sym_e is
// Eve's symbol when she applies the public correction; sym_e_raw is her
// symbol when she ignores it (identical for NEC and GB).
struct ProtocolOutcome {
  int sym_a = kNoSymbol;
  int sym_b = kNoSymbol;
  int sym_e = kNoSymbol;
  int sym_e_raw = kNoSymbol;
  std::optional<CorrectionIndex> xi;
  bool retained = true;
};

// Receiver side of ADQC: correct the raw measurement with the decoded error
// estimate and quantize.
// `length` is the length of the receiver's interval containing v.
inline int corrected_symbol(const Quantizer& q, double v, double length, CorrectionIndex xi,
                            const AdqcOptions& opts) noexcept {
  double shifted = v - decode_correction(length, xi, opts.reconstruction);
  if (opts.recenter) shifted += 0.5 * length;
  return static_cast<int>(q.quantize(shifted));
}

inline int corrected_symbol(const Quantizer& q, double v, CorrectionIndex xi, const AdqcOptions& opts) noexcept {
  return corrected_symbol(q, v, q.interval_of(v).length, xi, opts);
}

inline ProtocolOutcome nec_step(const Quantizer& qa, const Quantizer& qb, const Quantizer& qe,
                                const TriSample& s) noexcept {
  const int e = static_cast<int>(qe.quantize(s.z));
  return {static_cast<int>(qa.quantize(s.x)), static_cast<int>(qb.quantize(s.y)), e, e, std::nullopt, true};
}

// correction_bits must already be validated.
inline ProtocolOutcome adqc_step(const Quantizer& qa, const Quantizer& qb, const Quantizer& qe, const TriSample& s,
                                 int correction_bits, const AdqcOptions& opts) {
  const CorrectionIndex xi = encode_correction(qa, s.x, correction_bits);
  return {static_cast<int>(qa.quantize(s.x)), corrected_symbol(qb, s.y, xi, opts), corrected_symbol(qe, s.z, xi, opts),
          static_cast<int>(qe.quantize(s.z)), xi, true};
}

// Alice discards samples whose x lies strictly within guard_width / 2 of one
// of her interior thresholds (or exactly on one).
inline bool in_guard(const Quantizer& qa, double x, double guard_width) noexcept {
  for (const double t : qa.interior())
    if (std::abs(x - t) < 0.5 * guard_width || x == t) return guard_width > 0.0;
  return false;
}

inline ProtocolOutcome gb_step(const Quantizer& qa, const Quantizer& qb, const Quantizer& qe, const TriSample& s,
                               double guard_width) noexcept {
  if (!in_guard(qa, s.x, guard_width)) return nec_step(qa, qb, qe, s);
  ProtocolOutcome dropped;
  dropped.retained = false;
  return dropped;
}

std::vector<ProtocolOutcome> run_nec(const Quantizer& qa, const Quantizer& qb, const Quantizer& qe,
                                     const Dataset& ds);

std::vector<ProtocolOutcome> run_adqc(const Quantizer& qa, const Quantizer& qb, const Quantizer& qe,
                                      const Dataset& ds, int correction_bits, const AdqcOptions& opts = {});

// Uniform M-interval grid on [t_min, t_max] for all three parties.
std::vector<ProtocolOutcome> run_gb(int bits, double guard_width, const Dataset& ds, double t_min = -kSaturation,
                                    double t_max = kSaturation);

// Guards around Alice's interior thresholds; Bob and Eve quantize with their
// own quantizers. Throws GuardTooWide if the guard swallows an interval.
std::vector<ProtocolOutcome> run_gb(const Quantizer& qa, const Quantizer& qb, const Quantizer& qe,
                                    double guard_width, const Dataset& ds);

// Dispatches on scheme.kind (GB guards are placed around qa's thresholds).
std::vector<ProtocolOutcome> run_scheme(const SchemeSpec& scheme, const Quantizer& qa, const Quantizer& qb,
                                        const Quantizer& qe, const Dataset& ds, const AdqcOptions& opts = {});

void check_guard(const Quantizer& qa, double guard_width);

// CSV trace, columns x,y,z,sym_a,sym_b,sym_e,xi,retained. Empty fields for
// absent xi and for the symbols of discarded samples.
void write_trace(std::ostream& out, const Dataset& ds, std::span<const ProtocolOutcome> outcomes);

}  // namespace adqc
