#include "adqc/error.hpp"

namespace adqc {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::NotPositiveSemidefinite: return "NotPositiveSemidefinite";
    case Errc::CorrelationOutOfRange: return "CorrelationOutOfRange";
    case Errc::InvalidSampleCount: return "InvalidSampleCount";
    case Errc::InvalidRange: return "InvalidRange";
    case Errc::BitsOutOfRange: return "BitsOutOfRange";
    case Errc::InvalidBoundaries: return "InvalidBoundaries";
    case Errc::MismatchedSymbolSizes: return "MismatchedSymbolSizes";
    case Errc::InvalidCorrectionBits: return "InvalidCorrectionBits";
    case Errc::GuardTooWide: return "GuardTooWide";
    case Errc::SymbolOutOfRange: return "SymbolOutOfRange";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::NoRetainedSamples: return "NoRetainedSamples";
    case Errc::DegenerateDenominator: return "DegenerateDenominator";
    case Errc::InvalidThresholds: return "InvalidThresholds";
    case Errc::NoSchemes: return "NoSchemes";
    case Errc::InvalidPlan: return "InvalidPlan";
    case Errc::Parse: return "Parse";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace adqc
