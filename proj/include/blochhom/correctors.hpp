#pragma once

#include <cstdint>
#include <vector>

#include "blochhom/bloch.hpp"

namespace blochhom {

/// e_a.sigma(grad + 2 i pi theta)x + (div + 2 i pi theta)(sigma e_a x), i.e. the
/// first-order coupling of the cell problem in direction a.
CVector apply_first_order(const CellProblem& problem, const Point& theta, int axis, const CVector& x);

/// Right-hand side of the first-order corrector equation for axis k.
CVector zeta_rhs(const CellProblem& problem, const BlochEigenpair& pair, int axis);

struct FredholmTolerances {
  double compatibility = 1e-8;
  double orthogonality = 1e-10;
  double residual = 1e-8;
  double min_pivot_ratio = 1e-14;
};

/// Solves (A - lambda I) x = rhs on the orthogonal complement of psi through
/// the rank-one deflation A - lambda I + psi psi^H. The factorization is
/// computed once and shared by every right-hand side.
class ComplementSolver {
 public:
  ComplementSolver(CMatrix shifted, CVector psi, FredholmTolerances tol = {});

  struct Result {
    CVector solution;
    double compatibility = 0.0;  // |<psi, rhs>|
    double residual = 0.0;       // ||(A - lambda)x - rhs|| / max(||rhs||, 1)
    double orthogonality = 0.0;  // |<psi, x>|
  };

  /// Throws FredholmError when rhs is not orthogonal to psi.
  Result solve(const CVector& rhs) const;
  const FredholmTolerances& tolerances() const { return tol_; }

 private:
  CMatrix shifted_;
  CVector psi_;
  FredholmTolerances tol_;
  ComplexLu lu_;
};

/// Convenience wrapper around ComplementSolver for a single right-hand side.
CVector solve_on_complement(const CMatrix& shifted, const CVector& rhs, const CVector& psi,
                            const FredholmTolerances& tol = {});

/// Right-hand side of the second-order corrector equation for (k, l) with the
/// Hessian entry hessian_kl plugged in.
CVector chi_rhs(const CellProblem& problem, const BlochEigenpair& pair, const std::vector<CVector>& zetas,
                int k, int l, double hessian_kl);

/// The Hessian entry making chi_rhs orthogonal to psi. Throws
/// InconsistencyError if the value has a significant imaginary part.
double extract_hessian(const CellProblem& problem, const BlochEigenpair& pair,
                       const std::vector<CVector>& zetas, int k, int l);

struct WeakIdentityReport {
  double cell_residual = 0.0;   // tested cell equation
  double zeta_residual = 0.0;   // tested first-order corrector equation
  double max_residual = 0.0;
  std::size_t test_count = 0;
};

/// Unit basis vectors plus `random_count` seeded random vectors.
std::vector<CVector> weak_test_vectors(const PlaneWaveBasis& basis, std::size_t random_count, std::uint64_t seed);

/// Evaluates the oscillating weak forms of the cell and first corrector
/// equations at scale eps, with Bloch waves of period eps on D = (0,1)^N,
/// against each test function. Residuals are rescaled by eps^2 and divided
/// by ||Phi||, so they do not depend on eps.
WeakIdentityReport weak_identity_residuals(const CellProblem& problem, const BlochEigenpair& pair,
                                           const std::vector<CVector>& zetas, double eps,
                                           const std::vector<CVector>& tests);

struct CorrectorDiagnostic {
  int k = 0;
  int l = -1;  // -1 for first-order correctors
  double compatibility = 0.0;
  double residual = 0.0;
  double orthogonality = 0.0;
};

/// First- and second-order correctors at a certified critical point.
struct CorrectorSet {
  int band = 1;
  Point theta;
  std::vector<CVector> zeta;  // N entries
  std::vector<CVector> chi;   // N*N entries, row-major, symmetric
  Tensor2 hessian;            // from the chi compatibility condition
  std::vector<CorrectorDiagnostic> diagnostics;
  double chi_symmetry_defect = 0.0;

  const CVector& chi_at(int k, int l) const { return chi[static_cast<std::size_t>(k * theta.dim + l)]; }
};

CorrectorSet solve_correctors(const CellProblem& problem, const BlochEigenpair& pair,
                              const FredholmTolerances& tol = {}, Exec exec = Exec::parallel);

}  // namespace blochhom
