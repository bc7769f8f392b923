#pragma once

#include <limits>
#include <string>
#include <vector>

#include "blochhom/fields.hpp"
#include "blochhom/linalg.hpp"

namespace blochhom {

/// Plane waves e^{2 pi i k.y} with |k_i| <= cutoff, lexicographic order.
class PlaneWaveBasis {
 public:
  PlaneWaveBasis(int dim, int cutoff);

  int dim() const { return dim_; }
  int cutoff() const { return cutoff_; }
  std::size_t size() const { return size_; }
  WaveVector wave(std::size_t i) const;
  bool contains(const WaveVector& k) const;
  std::size_t index(const WaveVector& k) const;

 private:
  int dim_;
  int cutoff_;
  std::size_t size_;
};

/// Coefficient data of the Bloch cell problem at a fixed plane-wave cutoff.
///
/// Fourier coefficients of sigma_ab and c are tabulated for every difference
/// k - k' of two basis waves.
class CellProblem {
 public:
  /// Throws TruncationError when 2*cutoff exceeds the band resolved by the
  /// fields (M/2), and CoercivityError when sigma is not uniformly coercive.
  CellProblem(MatrixField sigma, PeriodicField potential, int cutoff);

  int dim() const { return sigma_.dim(); }
  int cutoff() const { return basis_.cutoff(); }
  const PlaneWaveBasis& basis() const { return basis_; }
  const MatrixField& sigma() const { return sigma_; }
  const PeriodicField& potential() const { return potential_; }
  double coercivity() const { return nu_; }

  cplx sigma_hat(int a, int b, const WaveVector& diff) const { return sigma_hat_[table(a, b)][diff_index(diff)]; }
  cplx potential_hat(const WaveVector& diff) const { return potential_hat_[diff_index(diff)]; }

  /// (F x)_k = sum_k' f^(k - k') x_k' for the multiplication by sigma_ab.
  CVector multiply_sigma(int a, int b, const CVector& x) const;
  /// Same for an arbitrary periodic field of the problem's dimension.
  CVector multiply(const PeriodicField& f, const CVector& x) const;

  CellProblem with_potential_shift(double delta) const;
  CellProblem with_cutoff(int cutoff) const;

 private:
  std::size_t table(int a, int b) const { return static_cast<std::size_t>(a * dim() + b); }
  std::size_t diff_index(const WaveVector& d) const;

  MatrixField sigma_;
  PeriodicField potential_;
  PlaneWaveBasis basis_;
  double nu_ = 0.0;
  std::vector<std::vector<cplx>> sigma_hat_;
  std::vector<cplx> potential_hat_;
};

/// The shifted cell operator A(theta) in the plane-wave basis:
/// A[k,k'] = 4 pi^2 (k+theta).sigma^(k-k')(k'+theta) + c^(k-k').
struct BlochOperator {
  Point theta;
  CMatrix matrix;
};

BlochOperator assemble_cell_operator(const CellProblem& problem, const Point& theta,
                                     Exec exec = Exec::parallel);

/// (lambda_n(theta), psi_n) with sum |psi_k|^2 = 1 and the largest-modulus
/// coefficient real positive.
struct BlochEigenpair {
  Point theta;
  int band = 1;
  double eigenvalue = 0.0;
  CVector coeffs;

  /// Periodic part psi_n(y) at a torus point.
  cplx evaluate(const PlaneWaveBasis& basis, const Point& y) const;
};

/// Applies the phase convention in place.
void fix_phase(CVector& v);

/// Bands 1..n_max at the operator's theta, ascending. Eigenvalues are
/// Rayleigh quotients against the assembled matrix.
std::vector<BlochEigenpair> solve_spectrum(const BlochOperator& op, int n_max,
                                           const JacobiOptions& jacobi = {});

struct BandSample {
  BlochEigenpair pair;
  double gap_below = std::numeric_limits<double>::infinity();
  double gap_above = std::numeric_limits<double>::infinity();
};

struct BandOptions {
  double step = 1e-3;
  bool richardson = true;
  double gap_tol = 1e-6;
  /// Minimum |<psi(theta), psi(theta')>| across a stencil before the points
  /// are treated as belonging to different bands.
  double overlap_min = 0.5;
  JacobiOptions jacobi{};
};

BandSample band_at(const CellProblem& problem, int band, const Point& theta,
                   const JacobiOptions& jacobi = {});

/// Central-difference gradient of lambda_n (one Richardson refinement by
/// default). Throws SimplicityError at theta and BandCrossingError when a
/// stencil point leaves the band.
Point band_gradient(const CellProblem& problem, int band, const Point& theta,
                    const BandOptions& options = {});

/// Central second-difference Hessian of lambda_n, same refinement and checks.
Tensor2 band_hessian(const CellProblem& problem, int band, const Point& theta,
                     const BandOptions& options = {});

enum class CriticalKind { minimum, maximum, saddle, degenerate };
std::string to_string(CriticalKind kind);
CriticalKind classify_hessian(const Tensor2& hessian, double tol);

struct CriticalOptions {
  double grad_tol = 1e-8;
  double gap_tol = 1e-6;
  int max_iter = 50;
  double damping = 0.5;
  BandOptions band{};
};

struct CriticalPoint {
  Point theta;
  int band = 1;
  double eigenvalue = 0.0;
  double gradient_norm = 0.0;
  double gap_below = 0.0;
  double gap_above = 0.0;
  Tensor2 hessian;
  CriticalKind kind = CriticalKind::degenerate;
  int iterations = 0;
};

/// Damped Newton iteration on band_gradient from a seed, certified for
/// simplicity. Throws ConvergenceError or SimplicityError.
CriticalPoint find_critical_point(const CellProblem& problem, int band, const Point& seed,
                                  const CriticalOptions& options = {});

/// Second-order periodic finite-difference Bloch operator on the M^N torus
/// grid, for diagonal sigma. Independent of the plane-wave assembly.
CMatrix assemble_fd_cell_operator(const MatrixField& sigma, const PeriodicField& potential,
                                  const Point& theta);

struct BandRow {
  Point theta;
  int band;
  double eigenvalue;
};

/// Bands 1..n_bands over a list of frequencies; frequencies are solved
/// concurrently under Exec::parallel. Output order follows the input.
std::vector<BandRow> sample_bands(const CellProblem& problem, const std::vector<Point>& thetas,
                                  int n_bands, Exec exec = Exec::parallel);

}  // namespace blochhom
