#include "blochhom/effective.hpp"

#include <algorithm>
#include <cmath>

#include "blochhom/error.hpp"
#include "blochhom/io.hpp"

namespace blochhom {

namespace {

CVector shifted_derivative(const PlaneWaveBasis& basis, const Point& theta, int b, const CVector& x) {
  CVector y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    y[i] = kI * (kTwoPi * (basis.wave(i)[static_cast<std::size_t>(b)] + theta[b])) * x[i];
  return y;
}

double real_quadrature(const cplx& z, const char* what) {
  if (std::abs(z.imag()) > 1e-10 * std::max(1.0, std::abs(z.real())))
    throw InconsistencyError(std::string(what) + " has imaginary part " + io::brief(z.imag()));
  return z.real();
}

}  // namespace

Tensor2 sigma_star_formula(const CellProblem& problem, const BlochEigenpair& pair,
                           const std::vector<CVector>& zetas) {
  const int dim = problem.dim();
  const PlaneWaveBasis& basis = problem.basis();
  const CVector& psi = pair.coeffs;

  std::vector<CVector> dpsi;
  for (int b = 0; b < dim; ++b) dpsi.push_back(shifted_derivative(basis, pair.theta, b, psi));

  // e_k . sigma (grad + 2 i pi theta) psi  and  (div + 2 i pi theta)(sigma e_k psi)
  auto flux = [&](int k) {
    CVector s(psi.size(), cplx{});
    for (int b = 0; b < dim; ++b) {
      const CVector t = problem.multiply_sigma(k, b, dpsi[static_cast<std::size_t>(b)]);
      for (std::size_t i = 0; i < s.size(); ++i) s[i] += t[i];
    }
    return s;
  };
  auto divergence = [&](int k) {
    CVector s(psi.size(), cplx{});
    for (int b = 0; b < dim; ++b) {
      const CVector t = shifted_derivative(basis, pair.theta, b, problem.multiply_sigma(b, k, psi));
      for (std::size_t i = 0; i < s.size(); ++i) s[i] += t[i];
    }
    return s;
  };

  const double norm = dot(psi, psi).real();
  Tensor2 out = Tensor2::zero(dim);
  for (int j = 0; j < dim; ++j)
    for (int k = j; k < dim; ++k) {
      const CVector& zj = zetas[static_cast<std::size_t>(j)];
      const CVector& zk = zetas[static_cast<std::size_t>(k)];
      const cplx v = 0.5 *
                     (dot(psi, problem.multiply_sigma(j, k, psi)) + dot(psi, problem.multiply_sigma(k, j, psi)) -
                      dot(zj, flux(k)) - dot(zj, divergence(k)) - dot(zk, flux(j)) - dot(zk, divergence(j))) /
                     norm;
      out(j, k) = out(k, j) = real_quadrature(v, "sigma* entry");
    }
  return out;
}

Tensor2 sigma_star_hessian(const CellProblem& problem, int band, const Point& theta, const BandOptions& options) {
  Tensor2 h = band_hessian(problem, band, theta, options);
  for (auto& v : h.a) v /= kEightPiSq;
  return h;
}

double relative_difference(const Tensor2& a, const Tensor2& b) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    diff = std::max(diff, std::abs(a.a[i] - b.a[i]));
    scale = std::max(scale, std::abs(b.a[i]));
  }
  return scale > 0.0 ? diff / scale : diff;
}

double g_star(const CellProblem& problem, const PeriodicField& g, const BlochEigenpair& pair) {
  const CVector& psi = pair.coeffs;
  return real_quadrature(dot(psi, problem.multiply(g, psi)) / dot(psi, psi).real(), "g*");
}

MacroCoefficient d_star(const CellProblem& problem, const TwoScaleField& d, const BlochEigenpair& pair) {
  const MacroGrid& grid = d.grid();
  MacroCoefficient out{grid, std::vector<double>(grid.node_count(), 0.0)};
  const PeriodicField* last = nullptr;
  double last_value = 0.0;
  for (std::size_t i = 0; i < grid.node_count(); ++i) {
    const PeriodicField& slice = d.slice(i);
    if (&slice != last) {
      last_value = g_star(problem, slice, pair);
      last = &slice;
    }
    out.values[i] = last_value;
  }
  return out;
}

EffectiveModel build_effective_model(const CellProblem& problem, const CriticalPoint& critical,
                                     const CorrectorSet& correctors, const BlochEigenpair& pair,
                                     const TwoScaleField& d, const PeriodicField& g,
                                     const EffectiveOptions& options) {
  EffectiveModel m;
  m.band = critical.band;
  m.theta = critical.theta;
  m.eigenvalue = pair.eigenvalue;
  m.coeffs = pair.coeffs;
  m.sigma_star = sigma_star_formula(problem, pair, correctors.zeta);
  m.sigma_star_fd = sigma_star_hessian(problem, critical.band, critical.theta, options.band);
  m.route_error = relative_difference(m.sigma_star, m.sigma_star_fd);
  m.routes_agree = m.route_error <= options.route_tol;
  if (m.sigma_star.dim == 2) m.symmetry_defect = std::abs(m.sigma_star(0, 1) - m.sigma_star(1, 0));
  if (m.symmetry_defect > options.symmetry_tol)
    throw InconsistencyError("sigma* is not symmetric (defect " + io::brief(m.symmetry_defect) + ")");
  if (!m.routes_agree)
    throw InconsistencyError("sigma* routes disagree: relative difference " + io::brief(m.route_error));
  m.kind = classify_hessian(m.sigma_star, options.definiteness_tol);
  m.positive_definite = m.sigma_star.min_eigenvalue() > options.definiteness_tol;
  m.d_star = d_star(problem, d, pair);
  m.g_star = g_star(problem, g, pair);
  return m;
}

}  // namespace blochhom
