#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include "blochhom/correctors.hpp"
#include "blochhom/error.hpp"

using namespace blochhom;

namespace {

CellProblem make(int dim, const char* s11, const char* s12, const char* s22, const char* c, int cutoff,
                 int m) {
  auto f = [&](const char* e) { return PeriodicField::from_expression(Expression::parse(e), dim, m); };
  if (dim == 1) return CellProblem(MatrixField::isotropic(f(s11)), f(c), cutoff);
  return CellProblem(MatrixField::from_entries(2, {f(s11), f(s12), f(s12), f(s22)}), f(c), cutoff);
}

CellProblem free1(int cutoff = 4) { return make(1, "1", "0", "1", "0", cutoff, 32); }
CellProblem mathieu(int cutoff = 64) { return make(1, "1", "0", "1", "2*cos(2*pi*y)", cutoff, 4 * cutoff); }
CellProblem aniso() {
  return make(2, "2 + cos(2*pi*y1)", "0.3*sin(2*pi*y2)", "1.5 + 0.5*cos(2*pi*(y1 + y2))",
              "cos(2*pi*y1)*cos(2*pi*y2)", 6, 32);
}

BlochEigenpair ground(const CellProblem& p) { return band_at(p, 1, Point::zero(p.dim())).pair; }

CMatrix shifted(const CellProblem& p, const BlochEigenpair& pair) {
  CMatrix a = assemble_cell_operator(p, pair.theta).matrix;
  a.add_to_diagonal(-pair.eigenvalue);
  return a;
}

double max_abs(const CVector& v) {
  double m = 0.0;
  for (auto x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

TEST_CASE("free case: correctors vanish and the hessian is 8 pi^2") {
  const auto p = free1();
  const auto pair = ground(p);
  CHECK(max_abs(zeta_rhs(p, pair, 0)) < 1e-14);
  const auto set = solve_correctors(p, pair);
  CHECK(max_abs(set.zeta[0]) < 1e-14);
  CHECK(max_abs(set.chi[0]) < 1e-12);
  CHECK(set.hessian(0, 0) == doctest::Approx(kEightPiSq).epsilon(1e-12));
  CHECK(max_abs(chi_rhs(p, pair, set.zeta, 0, 0, kEightPiSq)) < 1e-12);

  const auto q = make(2, "1", "0", "1", "0", 3, 16);
  const auto s2 = solve_correctors(q, ground(q));
  CHECK(std::abs(s2.hessian(0, 0) - kEightPiSq) < 1e-10);
  CHECK(std::abs(s2.hessian(1, 1) - kEightPiSq) < 1e-10);
  CHECK(std::abs(s2.hessian(0, 1)) < 1e-10);
  for (const auto& c : s2.chi) CHECK(max_abs(c) < 1e-12);
}

TEST_CASE("mathieu zeta right-hand side is twice the derivative of psi") {
  const auto p = mathieu(32);
  const auto pair = ground(p);
  const auto rhs = zeta_rhs(p, pair, 0);
  for (std::size_t i = 0; i < rhs.size(); ++i) {
    const double k = p.basis().wave(i)[0];
    CHECK(std::abs(rhs[i] - 2.0 * kTwoPi * kI * k * pair.coeffs[i]) < 1e-10);
  }
  CHECK(std::abs(dot(pair.coeffs, rhs)) < 1e-12);
}

TEST_CASE("solve on complement: zero, incompatible, and reference solutions") {
  const auto p = mathieu();
  const auto pair = ground(p);
  const CMatrix a = shifted(p, pair);
  const CVector zero(pair.coeffs.size());
  CHECK(max_abs(solve_on_complement(a, zero, pair.coeffs)) == 0.0);

  CVector bad = pair.coeffs;
  for (auto& v : bad) v *= 3.0;
  try {
    (void)solve_on_complement(a, bad, pair.coeffs);
    FAIL("incompatible rhs accepted");
  } catch (const FredholmError& e) {
    CHECK(e.projection() == doctest::Approx(3.0));
  }

  const CVector rhs = zeta_rhs(p, pair, 0);
  const ComplementSolver solver(a, pair.coeffs);
  const auto r = solver.solve(rhs);
  CHECK(r.residual <= 1e-8);
  CHECK(r.orthogonality <= 1e-10);
  CHECK(r.compatibility <= 1e-8);

  const auto n = static_cast<Eigen::Index>(a.size());
  Eigen::MatrixXcd ea(n, n);
  Eigen::VectorXcd eb(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    eb(i) = rhs[std::size_t(i)];
    for (Eigen::Index j = 0; j < n; ++j) ea(i, j) = a(std::size_t(i), std::size_t(j));
  }
  const Eigen::VectorXcd ref = ea.completeOrthogonalDecomposition().solve(eb);
  for (Eigen::Index i = 0; i < n; ++i) CHECK(std::abs(ref(i) - r.solution[std::size_t(i)]) < 1e-9);
}

TEST_CASE("degenerate eigenvalue is ill conditioned") {
  const auto p = free1();
  const auto pair = band_at(p, 1, Point(0.5)).pair;
  CHECK_THROWS_AS(ComplementSolver(shifted(p, pair), pair.coeffs), ConditioningError);
}

TEST_CASE("correctors satisfy the Fredholm invariants") {
  for (const auto& p : {mathieu(), aniso(), make(1, "2 + cos(2*pi*y)", "0", "1", "0", 64, 256)}) {
    const auto pair = ground(p);
    const auto set = solve_correctors(p, pair);
    const CMatrix a = shifted(p, pair);
    const int n = p.dim();
    CHECK(set.diagnostics.size() == std::size_t(n + n * n));
    for (const auto& d : set.diagnostics) {
      CHECK(d.compatibility <= 1e-8);
      CHECK(d.residual <= 1e-8);
      CHECK(d.orthogonality <= 1e-10);
    }
    for (int k = 0; k < n; ++k) {
      CHECK(std::abs(dot(pair.coeffs, set.zeta[std::size_t(k)])) <= 1e-10);
      for (int l = 0; l < n; ++l) {
        const CVector rhs = chi_rhs(p, pair, set.zeta, k, l, set.hessian(k, l));
        CHECK(std::abs(dot(pair.coeffs, rhs)) <= 1e-8);
        const CVector ax = a * set.chi_at(k, l);
        double r = 0.0;
        for (std::size_t i = 0; i < ax.size(); ++i) r += std::norm(ax[i] - rhs[i]);
        CHECK(std::sqrt(r) <= 1e-8 * std::max(1.0, norm2(rhs)));
      }
    }
    CHECK(set.chi_symmetry_defect <= 1e-10);
  }
}

TEST_CASE("anisotropic 2D hessian and chi are symmetric") {
  const auto p = aniso();
  const auto pair = ground(p);
  const auto set = solve_correctors(p, pair);
  CHECK(std::abs(extract_hessian(p, pair, set.zeta, 0, 1) - extract_hessian(p, pair, set.zeta, 1, 0)) <= 1e-10);
  CHECK(std::abs(set.hessian(0, 1) - set.hessian(1, 0)) <= 1e-10);
  const CVector a = chi_rhs(p, pair, set.zeta, 0, 1, set.hessian(0, 1));
  const CVector b = chi_rhs(p, pair, set.zeta, 1, 0, set.hessian(1, 0));
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-12);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(set.chi_at(0, 1)[i] - set.chi_at(1, 0)[i]) <= 1e-10);
  CHECK(std::abs(set.hessian(0, 1)) > 1e-6);
}

TEST_CASE("extracted hessian matches the band curvature") {
  const auto p = mathieu();
  const auto pair = ground(p);
  const auto set = solve_correctors(p, pair);
  const double fd = band_hessian(p, 1, Point(0.0))(0, 0);
  CHECK(std::abs(set.hessian(0, 0) - fd) <= 1e-6 * std::abs(fd));

  const auto q = aniso();
  const auto qs = solve_correctors(q, ground(q));
  const Tensor2 h = band_hessian(q, 1, Point(0.0, 0.0));
  double scale = 0.0;
  for (double v : h.a) scale = std::max(scale, std::abs(v));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) CHECK(std::abs(qs.hessian(i, j) - h(i, j)) <= 1e-6 * scale);
}

TEST_CASE("gauge invariance of the hessian") {
  for (const auto& p : {mathieu(), aniso()}) {
    const auto pair = ground(p);
    const auto base = solve_correctors(p, pair);
    BlochEigenpair rotated = pair;
    const cplx phase = std::polar(1.0, 0.7);
    for (auto& v : rotated.coeffs) v *= phase;
    const auto set = solve_correctors(p, rotated);
    for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(set.hessian.a[i] - base.hessian.a[i]) <= 1e-10);
    for (std::size_t i = 0; i < pair.coeffs.size(); ++i)
      CHECK(std::abs(set.zeta[0][i] - phase * base.zeta[0][i]) <= 1e-10);
  }
}

TEST_CASE("zeta is the theta derivative of psi on the complement") {
  const auto p = mathieu(32);
  const auto pair = ground(p);
  const auto set = solve_correctors(p, pair);
  const double h = 1e-4;
  const auto plus = band_at(p, 1, Point(h)).pair.coeffs;
  const auto minus = band_at(p, 1, Point(-h)).pair.coeffs;
  CVector d(plus.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = (plus[i] - minus[i]) / (2 * h);
  const cplx proj = dot(pair.coeffs, d);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] -= proj * pair.coeffs[i];
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(std::abs(d[i] - kTwoPi * kI * set.zeta[0][i]) < 1e-6);
}

TEST_CASE("band slope vanishes at the certified critical point") {
  const auto p = mathieu(32);
  double prev = INFINITY;
  for (double h : {1e-2, 1e-3, 1e-4}) {
    const double s =
        std::abs(band_at(p, 1, Point(h)).pair.eigenvalue - band_at(p, 1, Point(-h)).pair.eigenvalue) / (2 * h);
    CHECK(s <= std::max(prev, 1e-9));
    prev = s;
  }
  CHECK(prev < 1e-8);
}

TEST_CASE("extract_hessian rejects inconsistent input") {
  const auto p = mathieu(32);
  const auto pair = ground(p);
  auto set = solve_correctors(p, pair);
  for (auto& v : set.zeta[0]) v *= kI;
  CHECK_THROWS_AS(extract_hessian(p, pair, set.zeta, 0, 0), InconsistencyError);
}

TEST_CASE("weak identities") {
  const auto f = free1();
  const auto fp = ground(f);
  const auto fs = solve_correctors(f, fp);
  const auto ft = weak_test_vectors(f.basis(), 10, 3);
  CHECK(weak_identity_residuals(f, fp, fs.zeta, 0.25, ft).max_residual <= 1e-12);

  const auto p = mathieu(32);
  const auto pair = ground(p);
  const auto set = solve_correctors(p, pair);
  const auto units = weak_test_vectors(p.basis(), 0, 1);
  CHECK(units.size() == p.basis().size());
  const auto a = weak_identity_residuals(p, pair, set.zeta, 0.25, units);
  const auto b = weak_identity_residuals(p, pair, set.zeta, 0.125, units);
  CHECK(a.max_residual <= 1e-8);
  CHECK(b.max_residual <= 1e-8);
  CHECK(std::abs(a.max_residual - b.max_residual) <= 1e-12);

  const auto random = weak_test_vectors(p.basis(), 100, 42);
  const auto all = std::vector<CVector>(random.begin() + std::ptrdiff_t(p.basis().size()), random.end());
  CHECK(all.size() == 100);
  const auto r = weak_identity_residuals(p, pair, set.zeta, 0.125, all);
  CHECK(r.test_count == 100);
  CHECK(r.max_residual <= 1e-8);

  const auto q = aniso();
  const auto qp = ground(q);
  const auto qs = solve_correctors(q, qp);
  CHECK(weak_identity_residuals(q, qp, qs.zeta, 0.25, weak_test_vectors(q.basis(), 20, 5)).max_residual <= 1e-8);
}

TEST_CASE("weak identities detect a wrong corrector") {
  const auto p = mathieu(32);
  const auto pair = ground(p);
  auto set = solve_correctors(p, pair);
  for (auto& v : set.zeta[0]) v *= 1.01;
  CHECK(weak_identity_residuals(p, pair, set.zeta, 0.25, weak_test_vectors(p.basis(), 0, 1)).zeta_residual > 1e-6);
}

TEST_CASE("serial and parallel corrector solves agree") {
  const auto p = aniso();
  const auto pair = ground(p);
  const auto a = solve_correctors(p, pair, {}, Exec::serial);
  const auto b = solve_correctors(p, pair, {}, Exec::parallel);
  CHECK(a.hessian.a == b.hessian.a);
  for (std::size_t i = 0; i < a.chi.size(); ++i) CHECK(a.chi[i] == b.chi[i]);
}
