#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "blochhom/expression.hpp"
#include "blochhom/types.hpp"

namespace blochhom {

/// Real coefficient on the unit torus sampled on the uniform grid {j/M}^N,
/// together with its Fourier coefficients for |k_i| <= M/2.
///
/// The Nyquist coefficient is split evenly between +M/2 and -M/2 so the
/// stored representation is conjugate symmetric and reproduces the samples.
class PeriodicField {
 public:
  using Rule = std::function<double(const Point&)>;

  static PeriodicField from_samples(int dim, int resolution, std::vector<double> samples);
  static PeriodicField from_rule(int dim, int resolution, const Rule& rule);
  static PeriodicField from_expression(const Expression& expr, int dim, int resolution);
  static PeriodicField constant(int dim, int resolution, double value);

  int dim() const { return dim_; }
  int resolution() const { return resolution_; }
  /// Largest |k_i| carried by the coefficient table.
  int max_wave() const { return resolution_ / 2; }
  std::size_t node_count() const { return samples_.size(); }
  Point node(std::size_t index) const;

  std::span<const double> samples() const { return samples_; }
  /// Fourier coefficient; zero outside the resolved band.
  cplx coefficient(const WaveVector& k) const;
  /// Trigonometric interpolant at an arbitrary torus point.
  double evaluate(const Point& y) const;
  /// Samples recomputed from the coefficient table.
  std::vector<double> synthesize() const;
  double max_abs() const;
  double mean() const { return coefficient({0, 0}).real(); }

  /// The same field plus a constant.
  PeriodicField plus_constant(double delta) const;

 private:
  PeriodicField(int dim, int resolution, std::vector<double> samples);
  std::size_t coeff_index(const WaveVector& k) const;

  int dim_ = 1;
  int resolution_ = 0;
  std::vector<double> samples_;
  std::vector<cplx> coeffs_;  // (M+1)^N, offset by M/2 per axis
};

/// Symmetric N x N matrix of periodic fields, e.g. the diffusion tensor.
class MatrixField {
 public:
  static MatrixField isotropic(const PeriodicField& a);
  /// Row-major N*N entries.
  static MatrixField from_entries(int dim, std::vector<PeriodicField> entries);

  int dim() const { return dim_; }
  int resolution() const { return entries_.front().resolution(); }
  const PeriodicField& operator()(int a, int b) const {
    return entries_[static_cast<std::size_t>(a * dim_ + b)];
  }
  Tensor2 at_node(std::size_t index) const;
  Tensor2 evaluate(const Point& y) const;
  MatrixField translated(const Point& shift) const;

 private:
  int dim_ = 1;
  std::vector<PeriodicField> entries_;
};

/// Minimum over grid nodes of the smallest eigenvalue of sigma(y).
/// Throws CoercivityError on asymmetric or non-coercive input.
double validate_coercivity(const MatrixField& sigma);

/// Uniform grid on D = (0,1)^N with P cells per axis (P+1 nodes per axis).
struct MacroGrid {
  int dim = 1;
  int cells = 0;

  int nodes_per_axis() const { return cells + 1; }
  std::size_t node_count() const {
    const auto n = static_cast<std::size_t>(nodes_per_axis());
    return dim == 1 ? n : n * n;
  }
  double spacing() const { return 1.0 / cells; }
  double cell_volume() const { return dim == 1 ? spacing() : spacing() * spacing(); }
  std::array<int, 2> multi_index(std::size_t i) const {
    if (dim == 1) return {static_cast<int>(i), 0};
    const auto n = static_cast<std::size_t>(nodes_per_axis());
    return {static_cast<int>(i / n), static_cast<int>(i % n)};
  }
  std::size_t linear_index(int i1, int i2) const {
    return dim == 1 ? static_cast<std::size_t>(i1)
                    : static_cast<std::size_t>(i1) * static_cast<std::size_t>(nodes_per_axis()) +
                          static_cast<std::size_t>(i2);
  }
  Point coordinate(std::size_t i) const {
    const auto m = multi_index(i);
    Point p = Point::zero(dim);
    for (int a = 0; a < dim; ++a) p[a] = m[static_cast<std::size_t>(a)] * spacing();
    return p;
  }
  bool is_boundary(std::size_t i) const {
    const auto m = multi_index(i);
    for (int a = 0; a < dim; ++a) {
      const int v = m[static_cast<std::size_t>(a)];
      if (v == 0 || v == cells) return true;
    }
    return false;
  }
  friend bool operator==(const MacroGrid&, const MacroGrid&) = default;
};

/// Complex nodal values on a MacroGrid with homogeneous Dirichlet boundary.
class MacroField {
 public:
  MacroField() = default;
  explicit MacroField(MacroGrid grid);
  /// Values at boundary nodes must vanish to `boundary_tol` (in absolute value);
  /// they are stored as exact zeros.
  MacroField(MacroGrid grid, CVector values, double boundary_tol = 1e-12);

  static MacroField from_expression(MacroGrid grid, const Expression& expr,
                                    double boundary_tol = 1e-12);

  const MacroGrid& grid() const { return grid_; }
  std::span<const cplx> values() const { return values_; }
  cplx operator[](std::size_t i) const { return values_[i]; }

  double l2_norm() const;
  /// Forward-difference H^1 seminorm.
  double h1_seminorm() const;

 private:
  MacroGrid grid_;
  CVector values_;
};

double l2_norm(const MacroGrid& grid, std::span<const cplx> values);
double h1_seminorm(const MacroGrid& grid, std::span<const cplx> values);

/// d(x, y): one periodic y-slice per macroscopic node. Slices are shared
/// when the rule does not depend on x.
class TwoScaleField {
 public:
  static TwoScaleField from_expression(const Expression& expr, MacroGrid grid, int dim,
                                       int resolution);

  const MacroGrid& grid() const { return grid_; }
  const PeriodicField& slice(std::size_t node) const { return *slices_[node]; }
  double evaluate(std::size_t node, const Point& y) const { return slices_[node]->evaluate(y); }
  double max_abs() const;

 private:
  MacroGrid grid_;
  std::vector<std::shared_ptr<const PeriodicField>> slices_;
};

/// Real nodal coefficient on a MacroGrid (no boundary condition).
struct MacroCoefficient {
  MacroGrid grid;
  std::vector<double> values;
};

/// CSV dump as `node,value` with 17 significant digits.
void write_csv(std::ostream& out, const PeriodicField& field);

}  // namespace blochhom
