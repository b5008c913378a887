#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace pointdos {

using Complex = std::complex<double>;

enum class ErrorCode {
  BranchCut,
  ZeroDistance,
  DomainError,
  AccuracyLoss,
  SlowDecay,
  NoRoot,
  PoleHit,
  BranchError,
  GapViolation,
  RegimeViolation,
  Singular,
  GridTooCoarse,
  Explosion,
  NonConvergent,
  ConfigError,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::BranchCut: return "BranchCut";
    case ErrorCode::ZeroDistance: return "ZeroDistance";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::AccuracyLoss: return "AccuracyLoss";
    case ErrorCode::SlowDecay: return "SlowDecay";
    case ErrorCode::NoRoot: return "NoRoot";
    case ErrorCode::PoleHit: return "PoleHit";
    case ErrorCode::BranchError: return "BranchError";
    case ErrorCode::GapViolation: return "GapViolation";
    case ErrorCode::RegimeViolation: return "RegimeViolation";
    case ErrorCode::Singular: return "Singular";
    case ErrorCode::GridTooCoarse: return "GridTooCoarse";
    case ErrorCode::Explosion: return "Explosion";
    case ErrorCode::NonConvergent: return "NonConvergent";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

/// Principal branch of sqrt(-z) with Re > 0; defined off the cut [0, inf).
inline Complex sqrt_neg(Complex z) {
  if (z.imag() == 0.0 && z.real() >= 0.0)
    throw Error(ErrorCode::BranchCut, "sqrt(-z) undefined on [0,inf)");
  return std::sqrt(-z);
}

/// Spectral parameter with its branch data cached.
///
/// kappa = sqrt(-z), Re kappa > 0.  kappa0 is the d=2 renormalization scale
/// (ignored for d=1,3).  diag_sign multiplies the renormalized diagonal
/// wherever it enters a principal-matrix denominator; +1 follows the
/// reference convention, -1 is the flipped convention selected by the
/// d1_sign_flip / d2_sign_flip configuration flags.
struct SpectralPoint {
  Complex z;
  int d = 3;
  double kappa0 = 1.0;
  Complex kappa;
  double diag_sign = 1.0;

  SpectralPoint(Complex z_, int d_, double kappa0_ = 1.0, double diag_sign_ = 1.0)
      : z(z_), d(d_), kappa0(kappa0_), kappa(sqrt_neg(z_)), diag_sign(diag_sign_) {
    if (d < 1 || d > 3) throw Error(ErrorCode::DomainError, "dimension must be 1, 2 or 3");
    if (d == 2 && !(kappa0 > 0.0)) throw Error(ErrorCode::DomainError, "kappa0 must be positive");
    if (diag_sign != 1.0 && diag_sign != -1.0)
      throw Error(ErrorCode::DomainError, "diag_sign must be +1 or -1");
  }

  SpectralPoint with_z(Complex z_) const { return SpectralPoint(z_, d, kappa0, diag_sign); }
};

}  // namespace pointdos
