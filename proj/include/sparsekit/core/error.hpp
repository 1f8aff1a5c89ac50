#pragma once

#include <stdexcept>
#include <string>

namespace sparsekit {

enum class errc {
  invalid_argument,
  precondition_violation,
  capacity_exceeded,
  instability,
  degenerate_model,
  numeric,
  budget_exceeded,
  inconsistency,
  internal,
  usage,
};

inline const char* to_string(errc c) {
  switch (c) {
    case errc::invalid_argument: return "invalid-argument";
    case errc::precondition_violation: return "precondition-violation";
    case errc::capacity_exceeded: return "capacity-exceeded";
    case errc::instability: return "instability";
    case errc::degenerate_model: return "degenerate-model";
    case errc::numeric: return "numeric";
    case errc::budget_exceeded: return "budget-exceeded";
    case errc::inconsistency: return "internal-consistency";
    case errc::internal: return "internal";
    case errc::usage: return "usage";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

inline void require(bool cond, errc code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

}  // namespace sparsekit
