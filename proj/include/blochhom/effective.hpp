#pragma once

#include <string>

#include "blochhom/bloch.hpp"
#include "blochhom/correctors.hpp"

namespace blochhom {

/// sigma* from the corrector integral, evaluated exactly in Fourier space.
/// Throws InconsistencyError when an entry has imaginary part above 1e-10.
Tensor2 sigma_star_formula(const CellProblem& problem, const BlochEigenpair& pair,
                           const std::vector<CVector>& zetas);

/// (1/8 pi^2) times the finite-difference Hessian of lambda_n at theta.
Tensor2 sigma_star_hessian(const CellProblem& problem, int band, const Point& theta,
                           const BandOptions& options = {});

/// max_ij |a_ij - b_ij| / max_ij |b_ij|
double relative_difference(const Tensor2& a, const Tensor2& b);

/// Per-node int d(x, y) |psi_n(y)|^2 dy.
MacroCoefficient d_star(const CellProblem& problem, const TwoScaleField& d, const BlochEigenpair& pair);

/// int g(y) |psi_n(y)|^2 dy.
double g_star(const CellProblem& problem, const PeriodicField& g, const BlochEigenpair& pair);

struct EffectiveOptions {
  double route_tol = 1e-6;
  double symmetry_tol = 1e-10;
  /// Smallest eigenvalue of sigma* accepted as positive definite.
  double definiteness_tol = 1e-10;
  BandOptions band{};
  FredholmTolerances fredholm{};
};

/// The homogenized model at a certified critical point.
struct EffectiveModel {
  int band = 1;
  Point theta;
  double eigenvalue = 0.0;
  CVector coeffs;
  Tensor2 sigma_star;          // corrector formula
  Tensor2 sigma_star_fd;       // band Hessian route
  double route_error = 0.0;    // relative_difference(sigma_star, sigma_star_fd)
  bool routes_agree = false;
  double symmetry_defect = 0.0;
  CriticalKind kind = CriticalKind::degenerate;
  bool positive_definite = false;
  MacroCoefficient d_star;
  double g_star = 0.0;
};

/// Builds sigma*, d*, g* at `critical`. Throws InconsistencyError when the
/// two sigma* routes disagree beyond route_tol; an indefinite sigma* is only
/// flagged (simulation refuses it later).
EffectiveModel build_effective_model(const CellProblem& problem, const CriticalPoint& critical,
                                     const CorrectorSet& correctors, const BlochEigenpair& pair,
                                     const TwoScaleField& d, const PeriodicField& g,
                                     const EffectiveOptions& options = {});

}  // namespace blochhom
