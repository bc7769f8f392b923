#pragma once

#include <span>
#include <vector>

#include "blochhom/parallel.hpp"
#include "blochhom/types.hpp"

namespace blochhom {

/// Dense square complex matrix, row-major.
class CMatrix {
 public:
  CMatrix() = default;
  explicit CMatrix(std::size_t n) : n_(n), a_(n * n, cplx{}) {}

  std::size_t size() const { return n_; }
  cplx& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
  cplx operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }
  std::span<cplx> data() { return a_; }
  std::span<const cplx> data() const { return a_; }

  CVector operator*(const CVector& x) const;
  CVector column(std::size_t j) const;
  double frobenius_norm() const;
  /// max |A_ij - conj(A_ji)|
  double hermitian_defect() const;
  void add_to_diagonal(double shift);

 private:
  std::size_t n_ = 0;
  std::vector<cplx> a_;
};

/// Spectral decomposition of a Hermitian matrix.
struct HermitianEigen {
  std::vector<double> values;  // ascending
  CMatrix vectors;             // column j pairs with values[j]
  int sweeps = 0;
  double final_off_norm = 0.0;
};

struct JacobiOptions {
  /// Convergence when the off-diagonal Frobenius norm falls below tol*||A||_F.
  /// One cleanup sweep follows, which quadratic convergence takes to roundoff.
  double tol = 1e-12;
  int max_sweeps = 100;
  /// serial: classic row-cyclic ordering. parallel: round-robin ordering with
  /// each round of disjoint rotations applied by OpenMP threads.
  Exec exec = Exec::parallel;
};

/// Cyclic Jacobi eigensolver; throws ConvergenceError past the sweep budget.
HermitianEigen jacobi_eigen(CMatrix a, const JacobiOptions& options = {});

/// LU factorization with partial pivoting of a dense complex matrix.
class ComplexLu {
 public:
  explicit ComplexLu(CMatrix a);
  CVector solve(const CVector& b) const;
  /// min |pivot| / max |pivot|
  double pivot_ratio() const { return pivot_ratio_; }

 private:
  CMatrix lu_;
  std::vector<std::size_t> perm_;
  double pivot_ratio_ = 1.0;
};

/// Real symmetric banded matrix with LDL^T factorization (no pivoting).
class BandedSymmetric {
 public:
  BandedSymmetric(std::size_t n, std::size_t bandwidth);

  std::size_t size() const { return n_; }
  std::size_t bandwidth() const { return bw_; }
  /// Lower-triangle entry, requires j <= i and i - j <= bandwidth.
  double& lower(std::size_t i, std::size_t j) { return a_[i * (bw_ + 1) + (i - j)]; }
  double lower(std::size_t i, std::size_t j) const { return a_[i * (bw_ + 1) + (i - j)]; }
  double entry(std::size_t i, std::size_t j) const;

  /// y = A x for the unfactored matrix.
  void multiply(std::span<const cplx> x, std::span<cplx> y) const;

  /// In-place LDL^T. Throws FactorizationError with the minimum pivot when a
  /// pivot is not positive (the matrix is not positive definite).
  void factorize();
  bool factorized() const { return factorized_; }
  double min_pivot() const { return min_pivot_; }
  void solve_in_place(std::span<cplx> b) const;

 private:
  std::size_t n_, bw_;
  std::vector<double> a_;
  bool factorized_ = false;
  double min_pivot_ = 0.0;
};

}  // namespace blochhom
