#include "core/common.hpp"

namespace bpc {

const char* status_name(Status s) {
  switch (s) {
    case Status::Ok: return "Ok";
    case Status::InvalidArgument: return "InvalidArgument";
    case Status::UnknownModel: return "UnknownModel";
    case Status::MissingColumn: return "MissingColumn";
    case Status::BadResultValue: return "BadResultValue";
    case Status::ParseError: return "ParseError";
    case Status::EmptyAfterTieRemoval: return "EmptyAfterTieRemoval";
    case Status::TieWithoutDavidson: return "TieWithoutDavidson";
    case Status::ConstantCovariate: return "ConstantCovariate";
    case Status::SinglePlayer: return "SinglePlayer";
    case Status::UnknownSubject: return "UnknownSubject";
    case Status::UnknownPlayer: return "UnknownPlayer";
    case Status::MissingCovariate: return "MissingCovariate";
    case Status::NonFiniteDensity: return "NonFiniteDensity";
    case Status::NonFiniteGradient: return "NonFiniteGradient";
    case Status::ZeroVariance: return "ZeroVariance";
    case Status::DegenerateDraws: return "DegenerateDraws";
    case Status::TooFewTailSamples: return "TooFewTailSamples";
    case Status::AllDivergent: return "AllDivergent";
    case Status::NonFiniteInit: return "NonFiniteInit";
    case Status::VersionMismatch: return "VersionMismatch";
    case Status::CorruptArchive: return "CorruptArchive";
    case Status::DataFingerprintMismatch: return "DataFingerprintMismatch";
    case Status::IoError: return "IoError";
    case Status::Internal: return "Internal";
  }
  return "Unknown";
}

int status_exit_class(Status s) {
  switch (s) {
    case Status::Ok:
      return 0;
    case Status::InvalidArgument:
    case Status::UnknownModel:
      return 1;
    case Status::MissingColumn:
    case Status::BadResultValue:
    case Status::ParseError:
    case Status::EmptyAfterTieRemoval:
    case Status::TieWithoutDavidson:
    case Status::ConstantCovariate:
    case Status::SinglePlayer:
    case Status::UnknownSubject:
    case Status::UnknownPlayer:
    case Status::MissingCovariate:
    case Status::ZeroVariance:
    case Status::DegenerateDraws:
    case Status::TooFewTailSamples:
      return 2;
    case Status::NonFiniteDensity:
    case Status::NonFiniteGradient:
    case Status::AllDivergent:
    case Status::NonFiniteInit:
      return 3;
    case Status::VersionMismatch:
    case Status::CorruptArchive:
    case Status::DataFingerprintMismatch:
    case Status::IoError:
      return 4;
    case Status::Internal:
      return 3;
  }
  return 3;
}

}  // namespace bpc
