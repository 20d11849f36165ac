#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace adqc {

inline constexpr double kSaturation = 6.0;  // T_max = -T_min
inline constexpr double kBaselineSpan = 3.0;
inline constexpr int kMaxBits = 16;

struct Interval {
  double lower = 0.0;
  double length = 0.0;
};

// Scalar quantizer with M = 2^b intervals [T_m, T_{m+1}); the last interval
// is closed on both ends and inputs outside [T_0, T_M] saturate to the
// outermost interval.
class Quantizer {
 public:
  // M equal intervals spanning [t_min, t_max].
  static Quantizer uniform(int bits, double t_min = -kSaturation, double t_max = kSaturation);

  // Interior thresholds at the interior points of an equal M-partition of
  // [-span, span]; outer edges stay at [t_min, t_max]. This is the baseline
  // "uniform" quantizer used by the experiments and the optimizer start.
  static Quantizer baseline(int bits, double span = kBaselineSpan, double t_min = -kSaturation,
                            double t_max = kSaturation);

  // boundaries = T_0 < T_1 < ... < T_M with M a power of two.
  static Quantizer from_boundaries(std::vector<double> boundaries);
  static Quantizer from_interior(std::span<const double> interior, double t_min = -kSaturation,
                                 double t_max = kSaturation);

  int bits() const noexcept { return bits_; }
  std::size_t levels() const noexcept { return boundaries_.size() - 1; }
  std::span<const double> boundaries() const noexcept { return boundaries_; }
  std::span<const double> interior() const noexcept {
    return std::span<const double>(boundaries_).subspan(1, boundaries_.size() - 2);
  }
  double t_min() const noexcept { return boundaries_.front(); }
  double t_max() const noexcept { return boundaries_.back(); }

  std::size_t quantize(double a) const noexcept;
  Interval interval(std::size_t m) const noexcept { return {boundaries_[m], boundaries_[m + 1] - boundaries_[m]}; }
  Interval interval_of(double a) const noexcept { return interval(quantize(a)); }

  // "bits=<b>\nboundaries=<T_0>,...,<T_M>\n" at 17 significant digits.
  std::string serialize() const;
  static Quantizer parse(std::string_view text);

  friend bool operator==(const Quantizer&, const Quantizer&) = default;

 private:
  Quantizer(int bits, std::vector<double> boundaries) : bits_(bits), boundaries_(std::move(boundaries)) {}

  int bits_;
  std::vector<double> boundaries_;
};

// Index of the equal-length sub-interval (out of K = 2^bits) holding Alice's
// quantization error; xi is 1-based.
struct CorrectionIndex {
  int xi = 1;
  int bits = 1;

  int alphabet() const noexcept { return 1 << bits; }
  friend bool operator==(const CorrectionIndex&, const CorrectionIndex&) = default;
};

// Quantization error relative to the lower edge of the selected interval,
// after clamping x into [T_min, T_max]; lies in [0, L].
double quantization_error(const Quantizer& q, double x) noexcept;

// xi = ceil(eta * K / L) clamped to [1, K]. Throws InvalidCorrectionBits
// unless 1 <= bits <= kMaxBits.
CorrectionIndex encode_correction(const Quantizer& q, double x, int bits);

enum class Reconstruction {
  Midpoint,  // (xi - 1/2) * L / K
  Literal,   // xi * L, no division by K; kept for ablation only
};

// Receiver-side estimate of Alice's quantization error, scaled by the length
// of the receiver's own interval at its raw measurement v.
double decode_correction(const Quantizer& q, double v, CorrectionIndex xi,
                         Reconstruction mode = Reconstruction::Midpoint) noexcept;

// Same, given the receiver's interval length directly.
inline double decode_correction(double length, CorrectionIndex xi,
                                Reconstruction mode = Reconstruction::Midpoint) noexcept {
  if (mode == Reconstruction::Literal) return xi.xi * length;
  return (xi.xi - 0.5) * length / xi.alphabet();
}

}  // namespace adqc
