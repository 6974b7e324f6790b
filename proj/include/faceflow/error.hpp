#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace faceflow {

enum class ErrorKind {
  // imageio
  MalformedHeader,
  TruncatedPayload,
  UnsupportedMaxval,
  EmptySequence,
  DimensionMismatch,
  Io,
  // flow
  InvalidParams,
  PyramidTooDeep,
  // regions
  DegenerateGrid,
  OutOfBounds,
  UnknownRegion,
  ParseError,
  OverlappingCells,
  CellOutOfGrid,
  // analysis
  EvenWindow,
  InvalidThreshold,
  EmptySeries,
  MalformedSeries,
  // synth
  TooSmall,
  ExcessiveShift,
  AmplitudeTooLarge,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedHeader: return "MalformedHeader";
    case ErrorKind::TruncatedPayload: return "TruncatedPayload";
    case ErrorKind::UnsupportedMaxval: return "UnsupportedMaxval";
    case ErrorKind::EmptySequence: return "EmptySequence";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::Io: return "Io";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::PyramidTooDeep: return "PyramidTooDeep";
    case ErrorKind::DegenerateGrid: return "DegenerateGrid";
    case ErrorKind::OutOfBounds: return "OutOfBounds";
    case ErrorKind::UnknownRegion: return "UnknownRegion";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::OverlappingCells: return "OverlappingCells";
    case ErrorKind::CellOutOfGrid: return "CellOutOfGrid";
    case ErrorKind::EvenWindow: return "EvenWindow";
    case ErrorKind::InvalidThreshold: return "InvalidThreshold";
    case ErrorKind::EmptySeries: return "EmptySeries";
    case ErrorKind::MalformedSeries: return "MalformedSeries";
    case ErrorKind::TooSmall: return "TooSmall";
    case ErrorKind::ExcessiveShift: return "ExcessiveShift";
    case ErrorKind::AmplitudeTooLarge: return "AmplitudeTooLarge";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable kind so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), detail_(what) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// Message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

/// True for failures caused by bad parameters or configuration, as opposed
/// to unreadable or inconsistent input data.
constexpr bool is_config_error(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidParams:
    case ErrorKind::PyramidTooDeep:
    case ErrorKind::DegenerateGrid:
    case ErrorKind::UnknownRegion:
    case ErrorKind::ParseError:
    case ErrorKind::OverlappingCells:
    case ErrorKind::CellOutOfGrid:
    case ErrorKind::EvenWindow:
    case ErrorKind::InvalidThreshold:
    case ErrorKind::TooSmall:
    case ErrorKind::ExcessiveShift:
    case ErrorKind::AmplitudeTooLarge:
      return true;
    default:
      return false;
  }
}

}  // namespace faceflow
