#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace oodmol {

/// Every failure raised by the library carries one of these kinds so callers
/// (and the CLI exit-code mapping) can branch without string matching.
enum class ErrorKind {
  RejectedFeature,
  LengthMismatch,
  EmptyScaffold,
  AcyclicScaffold,
  KTooLarge,
  InfeasibleQuota,
  NotEnoughClusters,
  EmptyInput,
  DimensionMismatch,
  TemplateParseError,
  BadConfig,
  NonScalarLoss,
  NaNGradient,
  BatchTooSmall,
  EmptySet,
  EmptyTargets,
  PoolTooSmall,
  GroupTooSmall,
  UnknownPolicy,
  DatasetParse,
  Io,
  HashMismatch,
  Locked,
  InvalidGraph,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// SMILES rejection; `offset` is the byte offset of the offending character.
class RejectedFeature : public Error {
 public:
  RejectedFeature(std::size_t offset, const std::string& what);

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace oodmol
