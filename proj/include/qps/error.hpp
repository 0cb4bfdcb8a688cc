#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qps {

enum class Errc {
  invalid_input,
  degenerate_input,
  singular_jacobian,
  not_converged,
  degenerate_geometry,
  no_dip_found,
  fit_diverged,
};

/// Stable kebab-case identifier, used verbatim in CLI error reports.
constexpr std::string_view name(Errc code) {
  switch (code) {
    case Errc::invalid_input: return "invalid-input";
    case Errc::degenerate_input: return "degenerate-input";
    case Errc::singular_jacobian: return "singular-jacobian";
    case Errc::not_converged: return "not-converged";
    case Errc::degenerate_geometry: return "degenerate-geometry";
    case Errc::no_dip_found: return "no-dip-found";
    case Errc::fit_diverged: return "fit-diverged";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace qps
