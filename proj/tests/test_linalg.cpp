#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "blochhom/error.hpp"
#include "blochhom/linalg.hpp"

using namespace blochhom;

namespace {

CMatrix random_hermitian(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  CMatrix a(n);
  for (std::size_t i = 0; i < n; ++i) {
    a(i, i) = g(rng);
    for (std::size_t j = i + 1; j < n; ++j) {
      a(i, j) = {g(rng), g(rng)};
      a(j, i) = std::conj(a(i, j));
    }
  }
  return a;
}

Eigen::MatrixXcd to_eigen(const CMatrix& a) {
  Eigen::MatrixXcd m(a.size(), a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j) m(Eigen::Index(i), Eigen::Index(j)) = a(i, j);
  return m;
}

void check_decomposition(const CMatrix& a, const HermitianEigen& e) {
  const std::size_t n = a.size();
  const Eigen::MatrixXcd v = to_eigen(e.vectors);
  const Eigen::MatrixXcd gram = v.adjoint() * v;
  CHECK((gram - Eigen::MatrixXcd::Identity(Eigen::Index(n), Eigen::Index(n))).norm() < 1e-10);
  Eigen::VectorXd lam(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) lam(Eigen::Index(i)) = e.values[i];
  const Eigen::MatrixXcd r = to_eigen(a) * v - v * lam.asDiagonal();
  CHECK(r.norm() < 1e-10 * a.frobenius_norm());
  for (std::size_t i = 1; i < n; ++i) CHECK(e.values[i - 1] <= e.values[i]);
}

}  // namespace

TEST_CASE("jacobi eigenvalues match a reference solver") {
  for (std::size_t n : {1u, 2u, 7u, 24u}) {
    const CMatrix a = random_hermitian(n, 100 + n);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> ref(to_eigen(a));
    for (Exec exec : {Exec::serial, Exec::parallel}) {
      JacobiOptions opt;
      opt.exec = exec;
      const HermitianEigen e = jacobi_eigen(a, opt);
      REQUIRE(e.values.size() == n);
      for (std::size_t i = 0; i < n; ++i)
        CHECK(std::abs(e.values[i] - ref.eigenvalues()(Eigen::Index(i))) < 1e-11);
      check_decomposition(a, e);
    }
  }
}

TEST_CASE("serial and parallel orderings agree on the spectrum") {
  const CMatrix a = random_hermitian(31, 9);
  JacobiOptions s, p;
  s.exec = Exec::serial;
  p.exec = Exec::parallel;
  const auto es = jacobi_eigen(a, s);
  const auto ep = jacobi_eigen(a, p);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(es.values[i] - ep.values[i]) < 1e-11);
}

TEST_CASE("jacobi handles diagonal and degenerate input") {
  CMatrix a(4);
  a(0, 0) = 3.0;
  a(1, 1) = -1.0;
  a(2, 2) = 3.0;
  a(3, 3) = 0.5;
  const auto e = jacobi_eigen(a);
  CHECK(e.values == std::vector<double>{-1.0, 0.5, 3.0, 3.0});
  check_decomposition(a, e);
}

TEST_CASE("jacobi reports an exhausted sweep budget") {
  JacobiOptions opt;
  opt.max_sweeps = 0;
  CHECK_THROWS_AS(jacobi_eigen(random_hermitian(6, 5), opt), ConvergenceError);
}

TEST_CASE("complex LU solves against a reference") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  const std::size_t n = 20;
  CMatrix a(n);
  for (auto& v : a.data()) v = {g(rng), g(rng)};
  CVector b(n);
  for (auto& v : b) v = {g(rng), g(rng)};
  const ComplexLu lu(a);
  const CVector x = lu.solve(b);
  Eigen::VectorXcd eb(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) eb(Eigen::Index(i)) = b[i];
  const Eigen::VectorXcd ex = to_eigen(a).partialPivLu().solve(eb);
  for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(x[i] - ex(Eigen::Index(i))) < 1e-10);
  CHECK(lu.pivot_ratio() > 0.0);
  CHECK(lu.pivot_ratio() <= 1.0);

  CMatrix singular(3);
  singular(0, 0) = 1.0;
  singular(1, 1) = 1.0;
  CHECK(ComplexLu(singular).pivot_ratio() == 0.0);
}

TEST_CASE("matrix helpers") {
  CMatrix a = random_hermitian(5, 1);
  CHECK(a.hermitian_defect() == 0.0);
  a(0, 1) += 1e-3;
  CHECK(a.hermitian_defect() == doctest::Approx(1e-3));
  CMatrix id(3);
  id.add_to_diagonal(2.0);
  CHECK(id.frobenius_norm() == doctest::Approx(std::sqrt(12.0)));
  const CVector x{1.0, kI, -1.0};
  const CVector y = id * x;
  CHECK(y[1] == 2.0 * kI);
}

TEST_CASE("banded LDLT matches a dense solve") {
  const std::size_t n = 40, bw = 3;
  BandedSymmetric m(n, bw);
  Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(Eigen::Index(n), Eigen::Index(n));
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = (i >= bw ? i - bw : 0); j <= i; ++j) {
      const double v = i == j ? 8.0 + u(rng) : u(rng);
      m.lower(i, j) = v;
      dense(Eigen::Index(i), Eigen::Index(j)) = v;
      dense(Eigen::Index(j), Eigen::Index(i)) = v;
    }
  CHECK(m.entry(2, 5) == m.entry(5, 2));
  CHECK(m.entry(0, 10) == 0.0);

  std::vector<cplx> x(n), y(n);
  for (auto& v : x) v = {u(rng), u(rng)};
  m.multiply(x, y);
  Eigen::VectorXcd ex(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) ex(Eigen::Index(i)) = x[i];
  const Eigen::VectorXcd ey = dense.cast<cplx>() * ex;
  for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y[i] - ey(Eigen::Index(i))) < 1e-13);

  m.factorize();
  CHECK(m.factorized());
  CHECK(m.min_pivot() > 0.0);
  m.solve_in_place(y);
  for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y[i] - x[i]) < 1e-12);
}

TEST_CASE("banded LDLT rejects indefinite matrices") {
  BandedSymmetric m(3, 1);
  m.lower(0, 0) = 1.0;
  m.lower(1, 0) = 2.0;
  m.lower(1, 1) = 1.0;
  m.lower(2, 1) = 0.0;
  m.lower(2, 2) = 1.0;
  try {
    m.factorize();
    FAIL("indefinite matrix factorized");
  } catch (const FactorizationError& e) {
    CHECK(e.min_pivot() == doctest::Approx(-3.0));
  }
}
