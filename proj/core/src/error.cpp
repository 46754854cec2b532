#include "oodmol/error.hpp"

namespace oodmol {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::RejectedFeature: return "RejectedFeature";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::EmptyScaffold: return "EmptyScaffold";
    case ErrorKind::AcyclicScaffold: return "AcyclicScaffold";
    case ErrorKind::KTooLarge: return "KTooLarge";
    case ErrorKind::InfeasibleQuota: return "InfeasibleQuota";
    case ErrorKind::NotEnoughClusters: return "NotEnoughClusters";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::TemplateParseError: return "TemplateParseError";
    case ErrorKind::BadConfig: return "BadConfig";
    case ErrorKind::NonScalarLoss: return "NonScalarLoss";
    case ErrorKind::NaNGradient: return "NaNGradient";
    case ErrorKind::BatchTooSmall: return "BatchTooSmall";
    case ErrorKind::EmptySet: return "EmptySet";
    case ErrorKind::EmptyTargets: return "EmptyTargets";
    case ErrorKind::PoolTooSmall: return "PoolTooSmall";
    case ErrorKind::GroupTooSmall: return "GroupTooSmall";
    case ErrorKind::UnknownPolicy: return "UnknownPolicy";
    case ErrorKind::DatasetParse: return "DatasetParse";
    case ErrorKind::Io: return "Io";
    case ErrorKind::HashMismatch: return "HashMismatch";
    case ErrorKind::Locked: return "Locked";
    case ErrorKind::InvalidGraph: return "InvalidGraph";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

RejectedFeature::RejectedFeature(std::size_t offset, const std::string& what)
    : Error(ErrorKind::RejectedFeature, what + " at byte offset " + std::to_string(offset)),
      offset_(offset) {}

}  // namespace oodmol
