#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace hartree {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define HARTREE_ERROR(Name)            \
  class Name : public Error {          \
   public:                             \
    using Error::Error;                \
  };

HARTREE_ERROR(QuadratureNotConverged)
HARTREE_ERROR(DimensionError)
HARTREE_ERROR(NotDifferentiable)
HARTREE_ERROR(IntegralDiverges)
HARTREE_ERROR(ScanTooCoarse)
HARTREE_ERROR(NoRoot)
HARTREE_ERROR(JacobianSingular)
HARTREE_ERROR(NearSingularStep)
HARTREE_ERROR(SvdFailure)
HARTREE_ERROR(MissingProvenance)
HARTREE_ERROR(InvalidArgument)
HARTREE_ERROR(IoError)

#undef HARTREE_ERROR

// Trace or Hermiticity drift beyond the configured tolerance. Carries the
// ledger rows written before the abort (as CSV text).
class DiagnosticBreach : public Error {
 public:
  DiagnosticBreach(const std::string& what, std::string ledger_csv)
      : Error(what), ledger(std::move(ledger_csv)) {}
  std::string ledger;
};

class NotConverged : public Error {
 public:
  NotConverged(const std::string& what, std::vector<double> residuals, std::vector<double> factors)
      : Error(what), residuals(std::move(residuals)), factors(std::move(factors)) {}
  std::vector<double> residuals;
  std::vector<double> factors;
};

struct SchemaViolation {
  std::string pointer;
  std::string message;
};

class SchemaError : public Error {
 public:
  explicit SchemaError(std::vector<SchemaViolation> v);
  std::vector<SchemaViolation> violations;
};

}  // namespace hartree
