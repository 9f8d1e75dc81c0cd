#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ctlab {

enum class ErrorKind {
  Domain,
  Singularity,
  NoSolution,
  DegenerateCost,
  TooLarge,
  IterationLimit,
  InvalidSpec,
  InvalidSection,
  Degenerate,
  InsufficientResolution,
  InvalidParameter,
  NotApplicable,
  Nondifferentiable,
  MissingArtifact,
  NothingToReport,
  Validation,
};

std::string_view to_string(ErrorKind kind);

/// Every module error carries its kind and the operation that raised it.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string op, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& op() const noexcept { return op_; }

 private:
  ErrorKind kind_;
  std::string op_;
};

}  // namespace ctlab
