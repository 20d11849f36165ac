#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace adqc {

enum class Errc {
  NotPositiveSemidefinite,
  CorrelationOutOfRange,
  InvalidSampleCount,
  InvalidRange,
  BitsOutOfRange,
  InvalidBoundaries,
  MismatchedSymbolSizes,
  InvalidCorrectionBits,
  GuardTooWide,
  SymbolOutOfRange,
  EmptyInput,
  NoRetainedSamples,
  DegenerateDenominator,
  InvalidThresholds,
  NoSchemes,
  InvalidPlan,
  Parse,
  Io,
};

std::string_view to_string(Errc code);

// All library failures are reported through this type; code() identifies the
// contract that was violated.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace adqc
