#include "carbosound/error.hpp"

namespace carbosound {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnreadableFile: return "UnreadableFile";
    case ErrorCode::NonUniformSampling: return "NonUniformSampling";
    case ErrorCode::EmptySignal: return "EmptySignal";
    case ErrorCode::InvalidWaveform: return "InvalidWaveform";
    case ErrorCode::MismatchedGrids: return "MismatchedGrids";
    case ErrorCode::InvalidManifest: return "InvalidManifest";
    case ErrorCode::UnknownWindow: return "UnknownWindow";
    case ErrorCode::AllBelowFloor: return "AllBelowFloor";
    case ErrorCode::ZeroEnergySignal: return "ZeroEnergySignal";
    case ErrorCode::NonPositiveImpedance: return "NonPositiveImpedance";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ZeroMean: return "ZeroMean";
    case ErrorCode::TooFewValues: return "TooFewValues";
    case ErrorCode::InsufficientBins: return "InsufficientBins";
    case ErrorCode::UnsortedDays: return "UnsortedDays";
    case ErrorCode::NoFundamental: return "NoFundamental";
    case ErrorCode::NonPositiveInput: return "NonPositiveInput";
    case ErrorCode::NonPositiveFundamental: return "NonPositiveFundamental";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::DegenerateX: return "DegenerateX";
    case ErrorCode::DegenerateData: return "DegenerateData";
    case ErrorCode::FitDiverged: return "FitDiverged";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::AliasedHarmonic: return "AliasedHarmonic";
    case ErrorCode::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& context)
    : std::runtime_error(std::string(to_string(code)) + ": " + context),
      code_(code),
      context_(context) {}

}  // namespace carbosound
