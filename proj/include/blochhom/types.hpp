#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

namespace blochhom {

using cplx = std::complex<double>;
using CVector = std::vector<cplx>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kFourPiSq = 4.0 * std::numbers::pi * std::numbers::pi;
inline constexpr double kEightPiSq = 8.0 * std::numbers::pi * std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};

/// A point (or frequency) in one or two dimensions.
struct Point {
  int dim = 1;
  std::array<double, 2> c{0.0, 0.0};

  Point() = default;
  explicit Point(double a) : dim(1), c{a, 0.0} {}
  Point(double a, double b) : dim(2), c{a, b} {}

  static Point zero(int dim) {
    Point p;
    p.dim = dim;
    return p;
  }

  double operator[](int i) const { return c[static_cast<std::size_t>(i)]; }
  double& operator[](int i) { return c[static_cast<std::size_t>(i)]; }

  double norm() const { return std::sqrt(c[0] * c[0] + c[1] * c[1]); }

  Point shifted(int axis, double h) const {
    Point p = *this;
    p[axis] += h;
    return p;
  }

  friend bool operator==(const Point&, const Point&) = default;
};

/// Integer wave vector of a plane wave e^{2 pi i k.y}.
using WaveVector = std::array<int, 2>;

/// Small dense real symmetric tensor (N <= 2), row-major.
struct Tensor2 {
  int dim = 1;
  std::array<double, 4> a{0.0, 0.0, 0.0, 0.0};

  static Tensor2 zero(int dim) {
    Tensor2 t;
    t.dim = dim;
    return t;
  }
  static Tensor2 identity(int dim) {
    Tensor2 t = zero(dim);
    for (int i = 0; i < dim; ++i) t(i, i) = 1.0;
    return t;
  }

  double operator()(int i, int j) const { return a[static_cast<std::size_t>(2 * i + j)]; }
  double& operator()(int i, int j) { return a[static_cast<std::size_t>(2 * i + j)]; }

  /// Eigenvalues of the symmetric part, ascending.
  std::array<double, 2> eigenvalues() const {
    if (dim == 1) return {a[0], a[0]};
    const double p = 0.5 * (a[0] + a[3]);
    const double off = 0.5 * (a[1] + a[2]);
    const double q = std::sqrt(0.25 * (a[0] - a[3]) * (a[0] - a[3]) + off * off);
    return {p - q, p + q};
  }
  double min_eigenvalue() const { return eigenvalues()[0]; }
  double max_eigenvalue() const { return dim == 1 ? a[0] : eigenvalues()[1]; }
};

inline cplx dot(const CVector& x, const CVector& y) {
  cplx s{0.0, 0.0};
  for (std::size_t i = 0; i < x.size(); ++i) s += std::conj(x[i]) * y[i];
  return s;
}

inline double norm2(const CVector& x) {
  double s = 0.0;
  for (const auto& v : x) s += std::norm(v);
  return std::sqrt(s);
}

}  // namespace blochhom
