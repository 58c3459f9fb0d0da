#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace resi {

enum class ErrorKind {
  Schema,            // missing column, malformed CSV, bad term spec
  DegenerateDesign,  // constant covariate, too few rows
  KnotPlacement,     // spline knots not strictly increasing
  Lookup,            // unknown or empty tested term set
  SingularSystem,    // rank-deficient design
  Separation,        // logistic fit failed to converge or separated
  UnsupportedFlavor, // HC3 on logistic
  IllConditioned,    // near-singular bread or Sigma_beta
  SignedUndefined,   // signed variant with m1 > 1
  InsufficientDf,    // n <= m + 2 for F/t variants
  BoundaryGradient,  // unsigned gradient requested at S ~ 0
  Parameter,         // alpha outside (0,1), bad replicate count
  BootstrapInstability,
  Solver,            // root not bracketed
  Config,
  Io,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library; `kind()` distinguishes failure modes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Schema: return "schema error";
    case ErrorKind::DegenerateDesign: return "degenerate design";
    case ErrorKind::KnotPlacement: return "knot placement error";
    case ErrorKind::Lookup: return "lookup error";
    case ErrorKind::SingularSystem: return "singular system";
    case ErrorKind::Separation: return "separation error";
    case ErrorKind::UnsupportedFlavor: return "unsupported flavor";
    case ErrorKind::IllConditioned: return "ill-conditioned";
    case ErrorKind::SignedUndefined: return "signed RESI undefined";
    case ErrorKind::InsufficientDf: return "insufficient degrees of freedom";
    case ErrorKind::BoundaryGradient: return "boundary gradient";
    case ErrorKind::Parameter: return "parameter error";
    case ErrorKind::BootstrapInstability: return "bootstrap instability";
    case ErrorKind::Solver: return "solver error";
    case ErrorKind::Config: return "config error";
    case ErrorKind::Io: return "io error";
  }
  return "error";
}

}  // namespace resi
