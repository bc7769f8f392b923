#include "blochhom/correctors.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "blochhom/error.hpp"
#include "blochhom/io.hpp"

namespace blochhom {

namespace {

// (D_b x)_k = 2 pi i (k_b + theta_b) x_k
CVector shifted_derivative(const PlaneWaveBasis& basis, const Point& theta, int b, const CVector& x) {
  CVector y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double kb = basis.wave(i)[static_cast<std::size_t>(b)] + theta[b];
    y[i] = kI * (kTwoPi * kb) * x[i];
  }
  return y;
}

void axpy(cplx a, const CVector& x, CVector& y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

}  // namespace

CVector apply_first_order(const CellProblem& problem, const Point& theta, int axis, const CVector& x) {
  const PlaneWaveBasis& basis = problem.basis();
  CVector out(x.size(), cplx{});
  for (int b = 0; b < problem.dim(); ++b) {
    // e_a . sigma (grad + 2 i pi theta) x
    axpy(1.0, problem.multiply_sigma(axis, b, shifted_derivative(basis, theta, b, x)), out);
    // (div + 2 i pi theta) (sigma e_a x)
    axpy(1.0, shifted_derivative(basis, theta, b, problem.multiply_sigma(b, axis, x)), out);
  }
  return out;
}

CVector zeta_rhs(const CellProblem& problem, const BlochEigenpair& pair, int axis) {
  return apply_first_order(problem, pair.theta, axis, pair.coeffs);
}

ComplementSolver::ComplementSolver(CMatrix shifted, CVector psi, FredholmTolerances tol)
    : shifted_(std::move(shifted)),
      psi_(std::move(psi)),
      tol_(tol),
      lu_([&] {
        CMatrix deflated = shifted_;
        const std::size_t n = deflated.size();
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j) deflated(i, j) += psi_[i] * std::conj(psi_[j]);
        return deflated;
      }()) {
  if (lu_.pivot_ratio() < tol_.min_pivot_ratio)
    throw ConditioningError("deflated corrector system is near singular (pivot ratio " +
                            io::brief(lu_.pivot_ratio()) + "); is the eigenvalue simple?");
}

ComplementSolver::Result ComplementSolver::solve(const CVector& rhs) const {
  Result r;
  const double rhs_norm = norm2(rhs);
  const cplx proj = dot(psi_, rhs);
  r.compatibility = std::abs(proj);
  if (r.compatibility > tol_.compatibility * std::max(1.0, rhs_norm))
    throw FredholmError("right-hand side is not orthogonal to the eigenfunction (|<psi, rhs>| = " +
                            io::brief(r.compatibility) + ")",
                        r.compatibility);
  CVector b = rhs;
  axpy(-proj, psi_, b);
  CVector x = lu_.solve(b);
  axpy(-dot(psi_, x), psi_, x);

  const CVector ax = shifted_ * x;
  double res = 0.0;
  for (std::size_t i = 0; i < ax.size(); ++i) res += std::norm(ax[i] - rhs[i]);
  r.residual = std::sqrt(res) / std::max(1.0, rhs_norm);
  r.orthogonality = std::abs(dot(psi_, x));
  r.solution = std::move(x);
  return r;
}

CVector solve_on_complement(const CMatrix& shifted, const CVector& rhs, const CVector& psi,
                            const FredholmTolerances& tol) {
  return ComplementSolver(shifted, psi, tol).solve(rhs).solution;
}

namespace {

// Every term of the second-order right-hand side except the Hessian one.
CVector chi_source(const CellProblem& problem, const BlochEigenpair& pair, const std::vector<CVector>& zetas,
                   int k, int l) {
  CVector s = apply_first_order(problem, pair.theta, k, zetas[static_cast<std::size_t>(l)]);
  axpy(1.0, apply_first_order(problem, pair.theta, l, zetas[static_cast<std::size_t>(k)]), s);
  axpy(1.0, problem.multiply_sigma(k, l, pair.coeffs), s);
  axpy(1.0, problem.multiply_sigma(l, k, pair.coeffs), s);
  return s;
}

}  // namespace

CVector chi_rhs(const CellProblem& problem, const BlochEigenpair& pair, const std::vector<CVector>& zetas,
                int k, int l, double hessian_kl) {
  CVector s = chi_source(problem, pair, zetas, k, l);
  axpy(-hessian_kl / kFourPiSq, pair.coeffs, s);
  return s;
}

double extract_hessian(const CellProblem& problem, const BlochEigenpair& pair, const std::vector<CVector>& zetas,
                       int k, int l) {
  const cplx h = kFourPiSq * dot(pair.coeffs, chi_source(problem, pair, zetas, k, l)) /
                 dot(pair.coeffs, pair.coeffs).real();
  if (std::abs(h.imag()) > 1e-8 * std::max(1.0, std::abs(h.real())))
    throw InconsistencyError("Hessian from the compatibility condition has imaginary part " +
                             io::brief(h.imag()));
  return h.real();
}

std::vector<CVector> weak_test_vectors(const PlaneWaveBasis& basis, std::size_t random_count, std::uint64_t seed) {
  std::vector<CVector> out;
  const std::size_t n = basis.size();
  for (std::size_t i = 0; i < n; ++i) {
    CVector e(n, cplx{});
    e[i] = 1.0;
    out.push_back(std::move(e));
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  for (std::size_t r = 0; r < random_count; ++r) {
    CVector v(n);
    for (auto& x : v) x = {normal(rng), normal(rng)};
    out.push_back(std::move(v));
  }
  return out;
}

WeakIdentityReport weak_identity_residuals(const CellProblem& problem, const BlochEigenpair& pair,
                                           const std::vector<CVector>& zetas, double eps,
                                           const std::vector<CVector>& tests) {
  if (!(eps > 0.0)) throw InputError("scale eps must be positive");
  const PlaneWaveBasis& basis = problem.basis();
  const int dim = problem.dim();
  const Point& theta = pair.theta;
  const double inv_eps = 1.0 / eps;

  // Fast-scale gradients (grad + 2 i pi theta / eps) of u(x/eps): D u / eps.
  auto grad = [&](const CVector& u) {
    std::vector<CVector> g;
    for (int b = 0; b < dim; ++b) {
      CVector d = shifted_derivative(basis, theta, b, u);
      for (auto& v : d) v *= inv_eps;
      g.push_back(std::move(d));
    }
    return g;
  };
  auto potential_minus_lambda = [&](const CVector& u) {
    CVector w = problem.multiply(problem.potential(), u);
    axpy(-pair.eigenvalue, u, w);
    return w;
  };
  // int sigma (grad+..)u . conj((grad+..)Phi) + eps^-2 int (c - lambda) u conj(Phi)
  auto bilinear = [&](const CVector& u, const CVector& phi, const std::vector<CVector>& grad_phi) {
    const auto gu = grad(u);
    cplx s{};
    for (int a = 0; a < dim; ++a)
      for (int b = 0; b < dim; ++b)
        s += dot(grad_phi[static_cast<std::size_t>(a)], problem.multiply_sigma(a, b, gu[static_cast<std::size_t>(b)]));
    s += inv_eps * inv_eps * dot(phi, potential_minus_lambda(u));
    return s;
  };

  const auto grad_psi = grad(pair.coeffs);
  WeakIdentityReport rep;
  rep.test_count = tests.size();
  for (const CVector& phi : tests) {
    const double phi_norm = std::max(norm2(phi), 1e-300);
    const auto grad_phi = grad(phi);
    const cplx cell = bilinear(pair.coeffs, phi, grad_phi);
    rep.cell_residual = std::max(rep.cell_residual, eps * eps * std::abs(cell) / phi_norm);

    for (int k = 0; k < dim; ++k) {
      const cplx lhs = bilinear(zetas[static_cast<std::size_t>(k)], phi, grad_phi);
      // eps^-1 int sigma (grad+..)psi . e_k conj(Phi) - eps^-1 int sigma e_k psi . conj((grad+..)Phi)
      cplx rhs{};
      for (int b = 0; b < dim; ++b) {
        rhs += inv_eps * dot(phi, problem.multiply_sigma(k, b, grad_psi[static_cast<std::size_t>(b)]));
        rhs -= inv_eps * dot(grad_phi[static_cast<std::size_t>(b)], problem.multiply_sigma(b, k, pair.coeffs));
      }
      rep.zeta_residual = std::max(rep.zeta_residual, eps * eps * std::abs(lhs - rhs) / phi_norm);
    }
  }
  rep.max_residual = std::max(rep.cell_residual, rep.zeta_residual);
  return rep;
}

CorrectorSet solve_correctors(const CellProblem& problem, const BlochEigenpair& pair, const FredholmTolerances& tol,
                              Exec exec) {
  const int dim = problem.dim();
  BlochOperator op = assemble_cell_operator(problem, pair.theta, exec);
  op.matrix.add_to_diagonal(-pair.eigenvalue);
  const ComplementSolver solver(std::move(op.matrix), pair.coeffs, tol);

  CorrectorSet set;
  set.band = pair.band;
  set.theta = pair.theta;
  set.zeta.resize(static_cast<std::size_t>(dim));
  set.hessian = Tensor2::zero(dim);

  auto check = [&](const ComplementSolver::Result& r, int k, int l) {
    if (r.residual > tol.residual)
      throw ConvergenceError("corrector residual " + io::brief(r.residual) + " above tolerance");
    if (r.orthogonality > tol.orthogonality)
      throw InconsistencyError("corrector not orthogonal to psi (" + io::brief(r.orthogonality) + ")");
    return CorrectorDiagnostic{k, l, r.compatibility, r.residual, r.orthogonality};
  };

  std::vector<CorrectorDiagnostic> zeta_diag(static_cast<std::size_t>(dim));
  parallel_for(static_cast<std::size_t>(dim), exec, [&](std::size_t k) {
    const auto r = solver.solve(zeta_rhs(problem, pair, static_cast<int>(k)));
    zeta_diag[k] = check(r, static_cast<int>(k), -1);
    set.zeta[k] = r.solution;
  });
  set.diagnostics = zeta_diag;

  for (int k = 0; k < dim; ++k)
    for (int l = k; l < dim; ++l) {
      const double h = extract_hessian(problem, pair, set.zeta, k, l);
      set.hessian(k, l) = set.hessian(l, k) = h;
    }

  const std::size_t nn = static_cast<std::size_t>(dim * dim);
  set.chi.resize(nn);
  std::vector<CorrectorDiagnostic> chi_diag(nn);
  parallel_for(nn, exec, [&](std::size_t idx) {
    const int k = static_cast<int>(idx) / dim;
    const int l = static_cast<int>(idx) % dim;
    const auto r = solver.solve(chi_rhs(problem, pair, set.zeta, k, l, set.hessian(k, l)));
    chi_diag[idx] = check(r, k, l);
    set.chi[idx] = r.solution;
  });
  set.diagnostics.insert(set.diagnostics.end(), chi_diag.begin(), chi_diag.end());

  for (int k = 0; k < dim; ++k)
    for (int l = k + 1; l < dim; ++l) {
      const CVector& a = set.chi_at(k, l);
      const CVector& b = set.chi_at(l, k);
      for (std::size_t i = 0; i < a.size(); ++i)
        set.chi_symmetry_defect = std::max(set.chi_symmetry_defect, std::abs(a[i] - b[i]));
    }
  return set;
}

}  // namespace blochhom
