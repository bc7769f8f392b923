#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "blochhom/error.hpp"
#include "blochhom/expression.hpp"
#include "blochhom/fft.hpp"
#include "blochhom/fields.hpp"

using namespace blochhom;

TEST_CASE("expression grammar") {
  CHECK(Expression::parse("1 + 2*3").at_y(Point(0.0)) == doctest::Approx(7.0));
  CHECK(Expression::parse("2^3^2").at_y(Point(0.0)) == doctest::Approx(512.0));
  CHECK(Expression::parse("-2^2").at_y(Point(0.0)) == doctest::Approx(-4.0));
  CHECK(Expression::parse("1/16").at_y(Point(0.0)) == 0.0625);
  CHECK(Expression::parse("cos(2*pi*y)").at_y(Point(0.25)) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(Expression::parse("y1*y2").at_y(Point(0.5, 4.0)) == doctest::Approx(2.0));
  CHECK(Expression::parse("sqrt(abs(-9)) + exp(0) + log(1) + tanh(0)").at_y(Point(0.0)) ==
        doctest::Approx(4.0));

  const Expression e = Expression::parse("x*cos(2*pi*y2)");
  CHECK(e.depends_on_x());
  CHECK(e.depends_on_y());
  CHECK(e.max_axis() == 2);
  CHECK(e(ExprArgs{Point(2.0, 0.0), Point(0.0, 0.5)}) == doctest::Approx(-2.0));
}

TEST_CASE("expression errors carry the offset") {
  CHECK_THROWS_AS(Expression::parse("1 +"), InputError);
  CHECK_THROWS_AS(Expression::parse("foo(1)"), InputError);
  CHECK_THROWS_AS(Expression::parse("(1 + 2"), InputError);
  CHECK_THROWS_AS(Expression::parse("y3"), InputError);
  try {
    (void)Expression::parse("1 + $");
    FAIL("no error");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find('4') != std::string::npos);
  }
}

TEST_CASE("fft matches a direct DFT and inverts") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  const std::size_t m = 32;
  std::vector<cplx> x(m);
  for (auto& v : x) v = {n(rng), n(rng)};
  std::vector<cplx> y = x;
  fft::transform(y, false);
  for (std::size_t k = 0; k < m; ++k) {
    cplx s{};
    for (std::size_t j = 0; j < m; ++j) s += x[j] * std::polar(1.0, -kTwoPi * double(j * k) / double(m));
    CHECK(std::abs(s - y[k]) < 1e-12);
  }
  fft::transform(y, true);
  for (std::size_t j = 0; j < m; ++j) CHECK(std::abs(y[j] / double(m) - x[j]) < 1e-14);
  CHECK(fft::is_power_of_two(64));
  CHECK_FALSE(fft::is_power_of_two(48));
}

TEST_CASE("fourier coefficients of elementary fields") {
  const auto one = PeriodicField::constant(1, 8, 1.0);
  CHECK(std::abs(one.coefficient({0, 0}) - 1.0) < 1e-15);
  for (int k = 1; k <= 4; ++k) CHECK(std::abs(one.coefficient({k, 0})) < 1e-15);

  const auto c = PeriodicField::from_expression(Expression::parse("2*cos(2*pi*y)"), 1, 8);
  CHECK(std::abs(c.coefficient({1, 0}) - 1.0) < 1e-15);
  CHECK(std::abs(c.coefficient({-1, 0}) - 1.0) < 1e-15);

  const auto s = PeriodicField::from_expression(Expression::parse("sin(2*pi*y)"), 1, 8);
  CHECK(std::abs(s.coefficient({1, 0}) - cplx(0.0, -0.5)) < 1e-15);
  CHECK(std::abs(s.coefficient({-1, 0}) - cplx(0.0, 0.5)) < 1e-15);
  CHECK(std::abs(s.coefficient({2, 0})) < 1e-15);
}

TEST_CASE("coercivity is stable under refinement of band-limited fields") {
  const auto e = Expression::parse("2 + cos(2*pi*y1)*cos(2*pi*y2)");
  const double coarse = validate_coercivity(MatrixField::isotropic(PeriodicField::from_expression(e, 2, 8)));
  const double fine = validate_coercivity(MatrixField::isotropic(PeriodicField::from_expression(e, 2, 32)));
  CHECK(std::abs(coarse - fine) < 1e-12);
  CHECK(validate_coercivity(MatrixField::isotropic(PeriodicField::constant(2, 8, 1.0))) == 1.0);
}

TEST_CASE("periodic field coefficients of a cosine") {
  const auto f = PeriodicField::from_expression(Expression::parse("2*cos(2*pi*y)"), 1, 16);
  CHECK(std::abs(f.coefficient({1, 0}) - 1.0) < 1e-15);
  CHECK(std::abs(f.coefficient({-1, 0}) - 1.0) < 1e-15);
  CHECK(std::abs(f.coefficient({0, 0})) < 1e-15);
  CHECK(std::abs(f.coefficient({3, 0})) < 1e-15);
  CHECK(f.coefficient({20, 0}) == cplx{});
  CHECK(f.max_wave() == 8);
  CHECK(f.mean() == doctest::Approx(0.0));
  for (double y : {0.0, 0.13, 0.5, 0.77})
    CHECK(f.evaluate(Point(y)) == doctest::Approx(2 * std::cos(kTwoPi * y)).epsilon(1e-13));
}

TEST_CASE("periodic field interpolates band-limited data and reproduces samples") {
  const auto expr = Expression::parse("1 + 0.5*sin(2*pi*y1)*cos(4*pi*y2) + 0.25*cos(6*pi*(y1 + y2))");
  const auto f = PeriodicField::from_expression(expr, 2, 16);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    const Point y(u(rng), u(rng));
    CHECK(std::abs(f.evaluate(y) - expr.at_y(y)) < 1e-12);
  }
  const auto s = f.synthesize();
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(std::abs(s[i] - f.samples()[i]) < 1e-13);
  for (int k1 = -8; k1 <= 8; ++k1)
    for (int k2 = -8; k2 <= 8; ++k2)
      CHECK(std::abs(f.coefficient({k1, k2}) - std::conj(f.coefficient({-k1, -k2}))) == 0.0);
}

TEST_CASE("periodic field rejects bad input") {
  CHECK_THROWS_AS(PeriodicField::from_samples(1, 12, std::vector<double>(12, 1.0)), InputError);
  CHECK_THROWS_AS(PeriodicField::from_samples(1, 8, std::vector<double>(7, 1.0)), InputError);
  CHECK_THROWS_AS(PeriodicField::from_expression(Expression::parse("x + y"), 1, 8), InputError);
  std::vector<double> bad(8, 1.0);
  bad[3] = NAN;
  CHECK_THROWS_AS(PeriodicField::from_samples(1, 8, bad), InputError);
}

TEST_CASE("plus_constant shifts only the mean") {
  const auto f = PeriodicField::from_expression(Expression::parse("cos(2*pi*y)"), 1, 8);
  const auto g = f.plus_constant(0.75);
  CHECK(g.mean() == doctest::Approx(0.75));
  CHECK(std::abs(g.coefficient({1, 0}) - f.coefficient({1, 0})) < 1e-15);
}

TEST_CASE("coercivity validation") {
  const auto a = PeriodicField::from_expression(Expression::parse("2 + cos(2*pi*y)"), 1, 16);
  CHECK(validate_coercivity(MatrixField::isotropic(a)) == doctest::Approx(1.0));
  const auto b = PeriodicField::from_expression(Expression::parse("cos(2*pi*y)"), 1, 16);
  CHECK_THROWS_AS(validate_coercivity(MatrixField::isotropic(b)), CoercivityError);

  const auto one = PeriodicField::constant(2, 8, 1.0);
  const auto half = PeriodicField::constant(2, 8, 0.5);
  const auto zero = PeriodicField::constant(2, 8, 0.0);
  CHECK_THROWS_AS(validate_coercivity(MatrixField::from_entries(2, {one, half, zero, one})), CoercivityError);
  CHECK(validate_coercivity(MatrixField::from_entries(2, {one, half, half, one})) == doctest::Approx(0.5));
}

TEST_CASE("matrix field translation") {
  const auto a = PeriodicField::from_expression(Expression::parse("2 + cos(2*pi*y)"), 1, 16);
  const MatrixField s = MatrixField::isotropic(a).translated(Point(0.25));
  CHECK(s.evaluate(Point(0.0))(0, 0) == doctest::Approx(2.0 + std::cos(kTwoPi * 0.25)).epsilon(1e-13));
}

TEST_CASE("macro grid indexing") {
  const MacroGrid g{2, 4};
  CHECK(g.node_count() == 25);
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    const auto m = g.multi_index(i);
    CHECK(g.linear_index(m[0], m[1]) == i);
  }
  CHECK(g.is_boundary(0));
  CHECK(g.is_boundary(g.linear_index(2, 4)));
  CHECK_FALSE(g.is_boundary(g.linear_index(2, 2)));
  CHECK(g.coordinate(g.linear_index(1, 3))[1] == doctest::Approx(0.75));
}

TEST_CASE("macro field boundary and norms") {
  const MacroGrid g{1, 256};
  const auto v = MacroField::from_expression(g, Expression::parse("sin(pi*x)"));
  CHECK(v[0] == cplx{});
  CHECK(v[256] == cplx{});
  CHECK(v.l2_norm() == doctest::Approx(std::sqrt(0.5)).epsilon(1e-10));
  CHECK(v.h1_seminorm() == doctest::Approx(kPi * std::sqrt(0.5)).epsilon(1e-4));
  CHECK_THROWS_AS(MacroField::from_expression(g, Expression::parse("1 + x")), InputError);
  CHECK_THROWS_AS(MacroField::from_expression(g, Expression::parse("sin(pi*x)*cos(2*pi*y)")), InputError);
}

TEST_CASE("two-scale field shares x-independent slices") {
  const MacroGrid g{1, 8};
  const auto d = TwoScaleField::from_expression(Expression::parse("cos(2*pi*y)"), g, 1, 8);
  CHECK(&d.slice(0) == &d.slice(5));
  const auto e = TwoScaleField::from_expression(Expression::parse("x*cos(2*pi*y)"), g, 1, 8);
  CHECK(&e.slice(0) != &e.slice(5));
  CHECK(e.evaluate(4, Point(0.0)) == doctest::Approx(0.5));
  CHECK(e.max_abs() == doctest::Approx(1.0));
}

TEST_CASE("csv output uses 17 significant digits") {
  const auto f = PeriodicField::constant(1, 4, 0.1);
  std::ostringstream out;
  write_csv(out, f);
  CHECK(out.str().find("0.10000000000000001") != std::string::npos);
}
