#include "thermofoot/error.hpp"

namespace thermofoot {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::TooFewSamples: return "TooFewSamples";
    case Errc::DegenerateSamples: return "DegenerateSamples";
    case Errc::EmptySamples: return "EmptySamples";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::ConstantImage: return "ConstantImage";
    case Errc::InvalidRect: return "InvalidRect";
    case Errc::EmptyForeground: return "EmptyForeground";
    case Errc::FeetNotSeparable: return "FeetNotSeparable";
    case Errc::CoincidentPoints: return "CoincidentPoints";
    case Errc::CollinearPoints: return "CollinearPoints";
    case Errc::SingularTransform: return "SingularTransform";
    case Errc::InvalidLandmarks: return "InvalidLandmarks";
    case Errc::EmptyOverlap: return "EmptyOverlap";
    case Errc::MaskTooSmall: return "MaskTooSmall";
    case Errc::EmptyRoi: return "EmptyRoi";
    case Errc::LesionOutsideFoot: return "LesionOutsideFoot";
    case Errc::InvalidAngle: return "InvalidAngle";
    case Errc::SourceExhausted: return "SourceExhausted";
    case Errc::ChecksumMismatch: return "ChecksumMismatch";
    case Errc::ParseError: return "ParseError";
    case Errc::MissingField: return "MissingField";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

} // namespace thermofoot
