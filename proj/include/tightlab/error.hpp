#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tightlab {

/// Every failure the library can raise. The names returned by `to_string`
/// are stable: reports and the CLI print them verbatim.
enum class ErrorKind {
  InvalidArgument,
  InvalidMetric,
  ExactTooLarge,
  MgfDiverged,
  NonCentered,
  EnvelopeViolated,
  GridTooCoarse,
  SlopeOutOfRange,
  NotMonotone,
  Infeasible,
  InfiniteW,
  AllInfinite,
  ZeroW,
  ZeroRho,
  CovarianceNotPSD,
  NotEnoughPaths,
  InvalidGenerator,
  ConfigError,
  IoError,
};

constexpr std::string_view to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::InvalidMetric: return "InvalidMetric";
    case ErrorKind::ExactTooLarge: return "ExactTooLarge";
    case ErrorKind::MgfDiverged: return "MgfDiverged";
    case ErrorKind::NonCentered: return "NonCentered";
    case ErrorKind::EnvelopeViolated: return "EnvelopeViolated";
    case ErrorKind::GridTooCoarse: return "GridTooCoarse";
    case ErrorKind::SlopeOutOfRange: return "SlopeOutOfRange";
    case ErrorKind::NotMonotone: return "NotMonotone";
    case ErrorKind::Infeasible: return "Infeasible";
    case ErrorKind::InfiniteW: return "InfiniteW";
    case ErrorKind::AllInfinite: return "AllInfinite";
    case ErrorKind::ZeroW: return "ZeroW";
    case ErrorKind::ZeroRho: return "ZeroRho";
    case ErrorKind::CovarianceNotPSD: return "CovarianceNotPSD";
    case ErrorKind::NotEnoughPaths: return "NotEnoughPaths";
    case ErrorKind::InvalidGenerator: return "InvalidGenerator";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept { return to_string(kind_); }

 private:
  ErrorKind kind_;
};

}  // namespace tightlab
