#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace thermofoot {

enum class Errc {
  TooFewSamples,
  DegenerateSamples,
  EmptySamples,
  DimensionMismatch,
  ConstantImage,
  InvalidRect,
  EmptyForeground,
  FeetNotSeparable,
  CoincidentPoints,
  CollinearPoints,
  SingularTransform,
  InvalidLandmarks,
  EmptyOverlap,
  MaskTooSmall,
  EmptyRoi,
  LesionOutsideFoot,
  InvalidAngle,
  SourceExhausted,
  ChecksumMismatch,
  ParseError,
  MissingField,
  InvalidArgument,
  IoError,
};

std::string_view to_string(Errc code);

/// Exception carrying a machine-readable error code alongside the message.
class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

private:
  Errc code_;
};

} // namespace thermofoot
