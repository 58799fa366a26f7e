#include "hartree/errors.hpp"

namespace hartree {

namespace {
std::string join(const std::vector<SchemaViolation>& v) {
  std::string s = "invalid configuration:";
  for (const auto& e : v) s += "\n  " + (e.pointer.empty() ? std::string("/") : e.pointer) + ": " + e.message;
  return s;
}
}  // namespace

SchemaError::SchemaError(std::vector<SchemaViolation> v) : Error(join(v)), violations(std::move(v)) {}

}  // namespace hartree
