#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include "blochhom/bloch.hpp"
#include "blochhom/error.hpp"

using namespace blochhom;

namespace {

int resolution_for(int cutoff) {
  int m = 8;
  while (m < 4 * cutoff) m *= 2;
  return m;
}

CellProblem free_problem(int dim, int cutoff) {
  const int m = resolution_for(cutoff);
  return CellProblem(MatrixField::isotropic(PeriodicField::constant(dim, m, 1.0)),
                     PeriodicField::constant(dim, m, 0.0), cutoff);
}

CellProblem mathieu(int cutoff, double q = 2.0) {
  const int m = resolution_for(cutoff);
  return CellProblem(MatrixField::isotropic(PeriodicField::constant(1, m, 1.0)),
                     PeriodicField::from_rule(1, m, [q](const Point& y) { return q * std::cos(kTwoPi * y[0]); }),
                     cutoff);
}

double eigen_lowest(const CMatrix& a) {
  Eigen::MatrixXcd m(a.size(), a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j) m(Eigen::Index(i), Eigen::Index(j)) = a(i, j);
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(m, Eigen::EigenvaluesOnly).eigenvalues()(0);
}

}  // namespace

TEST_CASE("plane-wave basis ordering") {
  const PlaneWaveBasis b(2, 1);
  CHECK(b.size() == 9);
  CHECK(b.wave(0) == WaveVector{-1, -1});
  CHECK(b.wave(4) == WaveVector{0, 0});
  for (std::size_t i = 0; i < b.size(); ++i) CHECK(b.index(b.wave(i)) == i);
  CHECK_FALSE(b.contains({2, 0}));
}

TEST_CASE("free operator at theta = 0 and 1/2") {
  const auto p = free_problem(1, 1);
  const auto a0 = assemble_cell_operator(p, Point(0.0)).matrix;
  const double fp = kFourPiSq;
  const double expect0[3] = {fp, 0.0, fp};
  const auto ah = assemble_cell_operator(p, Point(0.5)).matrix;
  const double pi2 = kPi * kPi;
  const double expecth[3] = {pi2, pi2, 9 * pi2};
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(std::abs(a0(i, j) - (i == j ? expect0[i] : 0.0)) < 1e-12);
      CHECK(std::abs(ah(i, j) - (i == j ? expecth[i] : 0.0)) < 1e-12);
    }
}

TEST_CASE("mathieu operator has unit off-diagonals") {
  const auto a = assemble_cell_operator(mathieu(1), Point(0.0)).matrix;
  CHECK(std::abs(a(0, 1) - 1.0) < 1e-14);
  CHECK(std::abs(a(1, 2) - 1.0) < 1e-14);
  CHECK(std::abs(a(0, 2)) < 1e-14);
  CHECK(std::abs(a(1, 1)) < 1e-14);
  CHECK(std::abs(a(0, 0) - kFourPiSq) < 1e-12);
}

TEST_CASE("assembly is Hermitian and matches between executors") {
  const int m = 16;
  const auto s11 = PeriodicField::from_expression(Expression::parse("2 + cos(2*pi*y1)"), 2, m);
  const auto s12 = PeriodicField::from_expression(Expression::parse("0.3*sin(2*pi*y2)"), 2, m);
  const auto s22 = PeriodicField::from_expression(Expression::parse("1.5 + 0.5*cos(2*pi*(y1+y2))"), 2, m);
  const auto c = PeriodicField::from_expression(Expression::parse("cos(2*pi*y1)*cos(2*pi*y2)"), 2, m);
  const CellProblem p(MatrixField::from_entries(2, {s11, s12, s12, s22}), c, 3);
  const auto a = assemble_cell_operator(p, Point(0.2, 0.7), Exec::serial).matrix;
  const auto b = assemble_cell_operator(p, Point(0.2, 0.7), Exec::parallel).matrix;
  CHECK(a.hermitian_defect() <= 1e-13);
  for (std::size_t i = 0; i < a.data().size(); ++i) CHECK(a.data()[i] == b.data()[i]);
}

TEST_CASE("cutoff beyond field resolution is a truncation error") {
  CHECK_THROWS_AS(CellProblem(MatrixField::isotropic(PeriodicField::constant(1, 8, 1.0)),
                              PeriodicField::constant(1, 8, 0.0), 3),
                  TruncationError);
}

TEST_CASE("free spectrum") {
  const auto p = free_problem(1, 4);
  const auto s0 = solve_spectrum(assemble_cell_operator(p, Point(0.0)), 3);
  CHECK(std::abs(s0[0].eigenvalue) < 1e-12);
  for (std::size_t i = 0; i < s0[0].coeffs.size(); ++i)
    CHECK(std::abs(s0[0].coeffs[i] - (p.basis().wave(i)[0] == 0 ? 1.0 : 0.0)) < 1e-12);
  CHECK(std::abs(s0[0].evaluate(p.basis(), Point(0.37)) - 1.0) < 1e-12);
  CHECK(s0[1].eigenvalue == doctest::Approx(kFourPiSq));
  CHECK(s0[2].eigenvalue == doctest::Approx(kFourPiSq));

  const auto sh = solve_spectrum(assemble_cell_operator(p, Point(0.5)), 2);
  CHECK(std::abs(sh[0].eigenvalue - kPi * kPi) < 1e-10);
  CHECK(std::abs(sh[1].eigenvalue - kPi * kPi) < 1e-10);
}

TEST_CASE("spectrum invariants") {
  const auto p = mathieu(12);
  const auto op = assemble_cell_operator(p, Point(0.3));
  const auto pairs = solve_spectrum(op, 5);
  const double norm = op.matrix.frobenius_norm();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& v = pairs[i].coeffs;
    CHECK(std::abs(norm2(v) - 1.0) < 1e-12);
    const CVector av = op.matrix * v;
    double r = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) r += std::norm(av[k] - pairs[i].eigenvalue * v[k]);
    CHECK(std::sqrt(r) <= 1e-10 * norm);
    std::size_t imax = 0;
    for (std::size_t k = 0; k < v.size(); ++k)
      if (std::abs(v[k]) > std::abs(v[imax])) imax = k;
    CHECK(v[imax].imag() == 0.0);
    CHECK(v[imax].real() > 0.0);
    if (i > 0) CHECK(pairs[i - 1].eigenvalue <= pairs[i].eigenvalue);
    for (std::size_t j = 0; j < i; ++j) CHECK(std::abs(dot(pairs[j].coeffs, v)) < 1e-10);
  }
}

TEST_CASE("mathieu ground state against a finer reference solve") {
  const auto coarse = solve_spectrum(assemble_cell_operator(mathieu(32), Point(0.0)), 1);
  const double ref = eigen_lowest(assemble_cell_operator(mathieu(64), Point(0.0)).matrix);
  CHECK(std::abs(coarse[0].eigenvalue - ref) < 1e-8);
}

TEST_CASE("constant potential shift moves every band") {
  const auto p = mathieu(10);
  const auto q = p.with_potential_shift(0.75);
  const auto a = solve_spectrum(assemble_cell_operator(p, Point(0.2)), 4);
  const auto b = solve_spectrum(assemble_cell_operator(q, Point(0.2)), 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(std::abs(b[i].eigenvalue - a[i].eigenvalue - 0.75) < 1e-10);
    for (std::size_t k = 0; k < a[i].coeffs.size(); ++k)
      CHECK(std::abs(b[i].coeffs[k] - a[i].coeffs[k]) < 1e-9);
  }
}

TEST_CASE("bands are periodic in theta") {
  const auto p = mathieu(12);
  for (int n = 1; n <= 3; ++n)
    CHECK(std::abs(band_at(p, n, Point(0.0)).pair.eigenvalue - band_at(p, n, Point(1.0)).pair.eigenvalue) <
          1e-10);
  const auto q = free_problem(2, 3);
  CHECK(std::abs(band_at(q, 1, Point(0.1, 0.0)).pair.eigenvalue -
                 band_at(q, 1, Point(0.1, 1.0)).pair.eigenvalue) < 1e-10);
}

TEST_CASE("cutoff convergence") {
  const auto theta = Point(0.3);
  const auto sigma = MatrixField::isotropic(
      PeriodicField::from_expression(Expression::parse("2 + cos(2*pi*y)"), 1, 128));
  const auto c = PeriodicField::from_expression(Expression::parse("3*cos(2*pi*y)"), 1, 128);
  double prev = INFINITY;
  const double ref = band_at(CellProblem(sigma, c, 32), 2, theta).pair.eigenvalue;
  for (int kc : {2, 4, 8}) {
    const double diff = std::abs(band_at(CellProblem(sigma, c, kc), 2, theta).pair.eigenvalue - ref);
    CHECK(diff < prev);
    prev = diff;
  }
}

TEST_CASE("band gradient examples") {
  const auto p = free_problem(1, 4);
  CHECK(std::abs(band_gradient(p, 1, Point(0.0))[0]) < 1e-8);
  CHECK(band_gradient(p, 1, Point(0.25))[0] == doctest::Approx(2 * kPi * kPi).epsilon(1e-8));
  CHECK(std::abs(band_gradient(mathieu(16), 1, Point(0.0))[0]) < 1e-8);
}

TEST_CASE("band hessian of the free band") {
  const auto p = free_problem(2, 3);
  const Tensor2 h = band_hessian(p, 1, Point(0.1, 0.2));
  CHECK(h(0, 0) == doctest::Approx(kEightPiSq).epsilon(1e-8));
  CHECK(h(1, 1) == doctest::Approx(kEightPiSq).epsilon(1e-8));
  CHECK(std::abs(h(0, 1)) < 1e-5);
}

TEST_CASE("derivative stencils detect degeneracy and crossings") {
  const auto p = free_problem(1, 4);
  CHECK_THROWS_AS(band_gradient(p, 1, Point(0.5)), SimplicityError);
  CHECK_THROWS_AS(band_gradient(p, 1, Point(0.4995)), BandCrossingError);
}

TEST_CASE("critical point search") {
  const auto f = free_problem(1, 4);
  const auto cp = find_critical_point(f, 1, Point(0.1));
  CHECK(std::abs(cp.theta[0]) < 1e-8);
  CHECK(cp.kind == CriticalKind::minimum);
  CHECK(cp.gradient_norm <= 1e-8);
  CHECK(cp.gap_above >= 1e-6);

  const auto m = find_critical_point(mathieu(16), 1, Point(0.05));
  CHECK(std::abs(m.theta[0]) < 1e-8);
  CHECK(m.kind == CriticalKind::minimum);

  try {
    (void)find_critical_point(f, 1, Point(0.5));
    FAIL("degenerate critical point accepted");
  } catch (const SimplicityError& e) {
    CHECK(e.gap_above() < 1e-6);
    CHECK(std::string(e.what()).find("simpl") != std::string::npos);
  }
}

TEST_CASE("the second mathieu band has a maximum at 0 and a minimum at 1/2") {
  const auto top = find_critical_point(mathieu(16), 2, Point(0.0));
  CHECK(std::abs(top.theta[0]) < 1e-8);
  CHECK(top.kind == CriticalKind::maximum);
  const auto bottom = find_critical_point(mathieu(16), 2, Point(0.45));
  CHECK(std::abs(bottom.theta[0] - 0.5) < 1e-8);
  CHECK(bottom.kind == CriticalKind::minimum);
}

TEST_CASE("hessian classification") {
  Tensor2 h = Tensor2::identity(2);
  CHECK(classify_hessian(h, 1e-10) == CriticalKind::minimum);
  h(0, 0) = -1.0;
  CHECK(classify_hessian(h, 1e-10) == CriticalKind::saddle);
  h(1, 1) = -2.0;
  CHECK(classify_hessian(h, 1e-10) == CriticalKind::maximum);
  h(1, 1) = 0.0;
  CHECK(classify_hessian(h, 1e-10) == CriticalKind::degenerate);
  CHECK(to_string(CriticalKind::saddle) == "saddle");
}

TEST_CASE("finite-difference oracle converges to the plane-wave band") {
  const double ref = band_at(mathieu(32), 1, Point(0.2)).pair.eigenvalue;
  double prev = INFINITY;
  for (int m : {16, 32, 64}) {
    const auto sigma = MatrixField::isotropic(PeriodicField::constant(1, m, 1.0));
    const auto c = PeriodicField::from_expression(Expression::parse("2*cos(2*pi*y)"), 1, m);
    const double fd = eigen_lowest(assemble_fd_cell_operator(sigma, c, Point(0.2)));
    const double err = std::abs(fd - ref);
    CHECK(err < prev);
    if (prev < INFINITY) CHECK(prev / err > 3.0);
    prev = err;
  }
}

TEST_CASE("sample_bands is executor independent and follows the free formula") {
  const auto p = free_problem(1, 4);
  std::vector<Point> thetas;
  for (int i = 0; i <= 8; ++i) thetas.emplace_back(i / 16.0);
  const auto s = sample_bands(p, thetas, 2, Exec::serial);
  const auto q = sample_bands(p, thetas, 2, Exec::parallel);
  REQUIRE(s.size() == 18);
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(s[i].eigenvalue == q[i].eigenvalue);
    CHECK(s[i].theta == q[i].theta);
  }
  for (const auto& r : s) {
    const double t = r.theta[0];
    const double expect = r.band == 1 ? kFourPiSq * t * t : kFourPiSq * (1 - t) * (1 - t);
    CHECK(std::abs(r.eigenvalue - expect) < 1e-9);
  }
}
