#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bpre {

enum class ErrorCode {
  EmptyPmf,
  NegativeProb,
  DuplicateKey,
  MassNotOne,
  InvalidWeight,
  WeightsNotOne,
  ZeroMeanComponent,
  OutOfHull,
  DegenerateLaw,
  NotStronglySupercritical,
  COutOfRange,
  TOutOfRange,
  SideMismatch,
  InvalidConfig,
  CapTooSmall,
  TooManyComponents,
  BudgetExceeded,
  NoHoldingPossible,
  ZeroEstimate,
  NoEventMass,
  ParseError,
  VersionMismatch,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyPmf: return "EmptyPmf";
    case ErrorCode::NegativeProb: return "NegativeProb";
    case ErrorCode::DuplicateKey: return "DuplicateKey";
    case ErrorCode::MassNotOne: return "MassNotOne";
    case ErrorCode::InvalidWeight: return "InvalidWeight";
    case ErrorCode::WeightsNotOne: return "WeightsNotOne";
    case ErrorCode::ZeroMeanComponent: return "ZeroMeanComponent";
    case ErrorCode::OutOfHull: return "OutOfHull";
    case ErrorCode::DegenerateLaw: return "DegenerateLaw";
    case ErrorCode::NotStronglySupercritical: return "NotStronglySupercritical";
    case ErrorCode::COutOfRange: return "COutOfRange";
    case ErrorCode::TOutOfRange: return "TOutOfRange";
    case ErrorCode::SideMismatch: return "SideMismatch";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::CapTooSmall: return "CapTooSmall";
    case ErrorCode::TooManyComponents: return "TooManyComponents";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::NoHoldingPossible: return "NoHoldingPossible";
    case ErrorCode::ZeroEstimate: return "ZeroEstimate";
    case ErrorCode::NoEventMass: return "NoEventMass";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so the
/// CLI can map it to an exit status and a structured diagnostic.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace bpre
