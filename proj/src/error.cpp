#include "ctlab/error.hpp"

namespace ctlab {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Singularity: return "singularity";
    case ErrorKind::NoSolution: return "no-solution";
    case ErrorKind::DegenerateCost: return "degenerate-cost";
    case ErrorKind::TooLarge: return "too-large";
    case ErrorKind::IterationLimit: return "iteration-limit";
    case ErrorKind::InvalidSpec: return "invalid-spec";
    case ErrorKind::InvalidSection: return "invalid-section";
    case ErrorKind::Degenerate: return "degenerate";
    case ErrorKind::InsufficientResolution: return "insufficient-resolution";
    case ErrorKind::InvalidParameter: return "invalid-parameter";
    case ErrorKind::NotApplicable: return "not-applicable";
    case ErrorKind::Nondifferentiable: return "nondifferentiable-point";
    case ErrorKind::MissingArtifact: return "missing-artifact";
    case ErrorKind::NothingToReport: return "nothing-to-report";
    case ErrorKind::Validation: return "validation";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, std::string op, const std::string& message)
    : std::runtime_error(op + ": " + message), kind_(kind), op_(std::move(op)) {}

}  // namespace ctlab
