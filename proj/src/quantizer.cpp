#include "adqc/quantizer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "adqc/error.hpp"

namespace adqc {

namespace {

void check_bits(int bits) {
  if (bits < 1 || bits > kMaxBits)
    throw Error(Errc::BitsOutOfRange, "bits per symbol must be in [1, 16], got " + std::to_string(bits));
}

void check_range(double t_min, double t_max) {
  if (!(t_min < t_max) || !std::isfinite(t_min) || !std::isfinite(t_max))
    throw Error(Errc::InvalidRange, "need finite t_min < t_max");
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

Quantizer Quantizer::uniform(int bits, double t_min, double t_max) {
  check_bits(bits);
  check_range(t_min, t_max);
  const std::size_t m = std::size_t{1} << bits;
  std::vector<double> b(m + 1);
  for (std::size_t i = 0; i <= m; ++i) b[i] = t_min + (t_max - t_min) * static_cast<double>(i) / static_cast<double>(m);
  b.back() = t_max;
  return Quantizer(bits, std::move(b));
}

Quantizer Quantizer::baseline(int bits, double span, double t_min, double t_max) {
  check_bits(bits);
  check_range(t_min, t_max);
  if (!(span > 0.0) || -span <= t_min || span >= t_max)
    throw Error(Errc::InvalidRange, "baseline span must lie strictly inside (t_min, t_max)");
  const std::size_t m = std::size_t{1} << bits;
  std::vector<double> b(m + 1);
  b.front() = t_min;
  b.back() = t_max;
  for (std::size_t i = 1; i < m; ++i) b[i] = -span + 2.0 * span * static_cast<double>(i) / static_cast<double>(m);
  return Quantizer(bits, std::move(b));
}

Quantizer Quantizer::from_boundaries(std::vector<double> boundaries) {
  if (boundaries.size() < 3 || !std::has_single_bit(boundaries.size() - 1))
    throw Error(Errc::InvalidBoundaries, "need 2^b + 1 boundaries with b >= 1");
  const int bits = std::countr_zero(boundaries.size() - 1);
  check_bits(bits);
  for (std::size_t i = 0; i + 1 < boundaries.size(); ++i)
    if (!(boundaries[i] < boundaries[i + 1]) || !std::isfinite(boundaries[i + 1]))
      throw Error(Errc::InvalidBoundaries, "boundaries must be finite and strictly increasing");
  if (!std::isfinite(boundaries.front())) throw Error(Errc::InvalidBoundaries, "boundaries must be finite");
  return Quantizer(bits, std::move(boundaries));
}

Quantizer Quantizer::from_interior(std::span<const double> interior, double t_min, double t_max) {
  std::vector<double> b;
  b.reserve(interior.size() + 2);
  b.push_back(t_min);
  b.insert(b.end(), interior.begin(), interior.end());
  b.push_back(t_max);
  return from_boundaries(std::move(b));
}

std::size_t Quantizer::quantize(double a) const noexcept {
  // Number of interior thresholds <= a; saturates at both ends.
  std::size_t m = 0;
  const std::size_t last = boundaries_.size() - 1;
  for (std::size_t i = 1; i < last; ++i) m += static_cast<std::size_t>(a >= boundaries_[i]);
  return m;
}

std::string Quantizer::serialize() const {
  std::ostringstream out;
  out << std::setprecision(17) << "bits=" << bits_ << "\nboundaries=";
  for (std::size_t i = 0; i < boundaries_.size(); ++i) out << (i ? "," : "") << boundaries_[i];
  out << '\n';
  return out.str();
}

Quantizer Quantizer::parse(std::string_view text) {
  int bits = -1;
  std::vector<double> boundaries;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw Error(Errc::Parse, "expected key=value: " + std::string(line));
    const auto key = trim(line.substr(0, eq));
    const std::string value(trim(line.substr(eq + 1)));
    if (key == "bits") {
      try {
        bits = std::stoi(value);
      } catch (const std::exception&) {
        throw Error(Errc::Parse, "bad bits value: " + value);
      }
    } else if (key == "boundaries") {
      std::istringstream list(value);
      std::string item;
      while (std::getline(list, item, ',')) {
        try {
          boundaries.push_back(std::stod(item));
        } catch (const std::exception&) {
          throw Error(Errc::Parse, "bad boundary value: " + item);
        }
      }
    } else {
      throw Error(Errc::Parse, "unknown quantizer key: " + std::string(key));
    }
  }
  auto q = from_boundaries(std::move(boundaries));
  if (q.bits() != bits) throw Error(Errc::Parse, "bits does not match boundary count");
  return q;
}

double quantization_error(const Quantizer& q, double x) noexcept {
  const double clamped = std::clamp(x, q.t_min(), q.t_max());
  return clamped - q.interval_of(clamped).lower;
}

CorrectionIndex encode_correction(const Quantizer& q, double x, int bits) {
  if (bits < 1 || bits > kMaxBits)
    throw Error(Errc::InvalidCorrectionBits, "correction bits must be in [1, 16], got " + std::to_string(bits));
  const double clamped = std::clamp(x, q.t_min(), q.t_max());
  const Interval cell = q.interval_of(clamped);
  const int k = 1 << bits;
  const double raw = std::ceil((clamped - cell.lower) * k / cell.length);
  return {static_cast<int>(std::clamp(raw, 1.0, static_cast<double>(k))), bits};
}

double decode_correction(const Quantizer& q, double v, CorrectionIndex xi, Reconstruction mode) noexcept {
  return decode_correction(q.interval_of(v).length, xi, mode);
}

}  // namespace adqc
