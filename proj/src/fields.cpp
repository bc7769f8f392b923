#include "blochhom/fields.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "blochhom/error.hpp"
#include "blochhom/fft.hpp"
#include "blochhom/io.hpp"

namespace blochhom {

namespace {

std::size_t ipow(std::size_t base, int dim) { return dim == 1 ? base : base * base; }

void check_shape(int dim, int resolution) {
  if (dim != 1 && dim != 2) throw InputError("field dimension must be 1 or 2");
  if (resolution < 4 || !fft::is_power_of_two(static_cast<std::size_t>(resolution)))
    throw InputError("field resolution must be a power of two >= 4, got " +
                     std::to_string(resolution));
}

double wrap_unit(double v) { return v - std::floor(v); }

}  // namespace

PeriodicField::PeriodicField(int dim, int resolution, std::vector<double> samples)
    : dim_(dim), resolution_(resolution), samples_(std::move(samples)) {
  check_shape(dim, resolution);
  const auto m = static_cast<std::size_t>(resolution);
  if (samples_.size() != ipow(m, dim)) throw InputError("sample count does not match resolution");
  for (double v : samples_)
    if (!std::isfinite(v)) throw InputError("non-finite sample value in periodic field");

  std::vector<cplx> work(samples_.begin(), samples_.end());
  if (dim == 1) fft::transform(work, false);
  else fft::transform_2d(work, m, false);
  const double scale = 1.0 / static_cast<double>(samples_.size());

  const int half = resolution / 2;
  const auto width = static_cast<std::size_t>(resolution + 1);
  coeffs_.assign(ipow(width, dim), cplx{});
  auto weight = [&](int k) { return std::abs(k) == half ? 0.5 : 1.0; };
  auto wrap = [&](int k) { return static_cast<std::size_t>(((k % resolution) + resolution) % resolution); };
  const int k2_lo = dim == 1 ? 0 : -half;
  const int k2_hi = dim == 1 ? 0 : half;
  for (int k1 = -half; k1 <= half; ++k1) {
    for (int k2 = k2_lo; k2 <= k2_hi; ++k2) {
      const std::size_t src = dim == 1 ? wrap(k1) : wrap(k1) * m + wrap(k2);
      const double w = weight(k1) * (dim == 1 ? 1.0 : weight(k2));
      coeffs_[coeff_index({k1, k2})] = work[src] * (scale * w);
    }
  }
  // Enforce exact conjugate symmetry of the real field.
  for (int k1 = -half; k1 <= half; ++k1) {
    for (int k2 = k2_lo; k2 <= k2_hi; ++k2) {
      const std::size_t a = coeff_index({k1, k2});
      const std::size_t b = coeff_index({-k1, -k2});
      if (a > b) continue;
      const cplx avg = 0.5 * (coeffs_[a] + std::conj(coeffs_[b]));
      coeffs_[a] = avg;
      coeffs_[b] = std::conj(avg);
    }
  }
}

PeriodicField PeriodicField::from_samples(int dim, int resolution, std::vector<double> samples) {
  return PeriodicField(dim, resolution, std::move(samples));
}

PeriodicField PeriodicField::from_rule(int dim, int resolution, const Rule& rule) {
  check_shape(dim, resolution);
  const auto m = static_cast<std::size_t>(resolution);
  std::vector<double> s(ipow(m, dim));
  for (std::size_t i = 0; i < s.size(); ++i) {
    Point y = Point::zero(dim);
    if (dim == 1) {
      y[0] = static_cast<double>(i) / resolution;
    } else {
      y[0] = static_cast<double>(i / m) / resolution;
      y[1] = static_cast<double>(i % m) / resolution;
    }
    s[i] = rule(y);
  }
  return PeriodicField(dim, resolution, std::move(s));
}

PeriodicField PeriodicField::from_expression(const Expression& expr, int dim, int resolution) {
  if (expr.depends_on_x())
    throw InputError("periodic coefficient \"" + expr.text() + "\" must not depend on x");
  if (expr.max_axis() > dim)
    throw InputError("expression \"" + expr.text() + "\" uses an axis beyond dimension " +
                     std::to_string(dim));
  return from_rule(dim, resolution, [&](const Point& y) { return expr.at_y(y); });
}

PeriodicField PeriodicField::constant(int dim, int resolution, double value) {
  return from_rule(dim, resolution, [value](const Point&) { return value; });
}

Point PeriodicField::node(std::size_t index) const {
  Point y = Point::zero(dim_);
  const auto m = static_cast<std::size_t>(resolution_);
  if (dim_ == 1) {
    y[0] = static_cast<double>(index) / resolution_;
  } else {
    y[0] = static_cast<double>(index / m) / resolution_;
    y[1] = static_cast<double>(index % m) / resolution_;
  }
  return y;
}

std::size_t PeriodicField::coeff_index(const WaveVector& k) const {
  const int half = resolution_ / 2;
  const auto i1 = static_cast<std::size_t>(k[0] + half);
  if (dim_ == 1) return i1;
  return i1 * static_cast<std::size_t>(resolution_ + 1) + static_cast<std::size_t>(k[1] + half);
}

cplx PeriodicField::coefficient(const WaveVector& k) const {
  const int half = resolution_ / 2;
  if (std::abs(k[0]) > half) return {};
  if (dim_ == 1) return k[1] == 0 ? coeffs_[coeff_index(k)] : cplx{};
  if (std::abs(k[1]) > half) return {};
  return coeffs_[coeff_index(k)];
}

double PeriodicField::evaluate(const Point& y) const {
  const int half = resolution_ / 2;
  const auto width = static_cast<std::size_t>(resolution_ + 1);
  std::vector<cplx> e1(width), e2(dim_ == 2 ? width : 1, cplx{1.0, 0.0});
  for (int k = -half; k <= half; ++k) {
    e1[static_cast<std::size_t>(k + half)] = std::polar(1.0, kTwoPi * k * wrap_unit(y[0]));
    if (dim_ == 2) e2[static_cast<std::size_t>(k + half)] = std::polar(1.0, kTwoPi * k * wrap_unit(y[1]));
  }
  cplx s{};
  if (dim_ == 1) {
    for (std::size_t i = 0; i < width; ++i) s += coeffs_[i] * e1[i];
  } else {
    for (std::size_t i = 0; i < width; ++i) {
      cplx row{};
      for (std::size_t j = 0; j < width; ++j) row += coeffs_[i * width + j] * e2[j];
      s += row * e1[i];
    }
  }
  return s.real();
}

std::vector<double> PeriodicField::synthesize() const {
  const auto m = static_cast<std::size_t>(resolution_);
  const int half = resolution_ / 2;
  std::vector<cplx> work(ipow(m, dim_), cplx{});
  auto wrap = [&](int k) { return static_cast<std::size_t>(((k % resolution_) + resolution_) % resolution_); };
  const int k2_lo = dim_ == 1 ? 0 : -half;
  const int k2_hi = dim_ == 1 ? 0 : half;
  for (int k1 = -half; k1 <= half; ++k1)
    for (int k2 = k2_lo; k2 <= k2_hi; ++k2) {
      const std::size_t dst = dim_ == 1 ? wrap(k1) : wrap(k1) * m + wrap(k2);
      work[dst] += coeffs_[coeff_index({k1, k2})];
    }
  if (dim_ == 1) fft::transform(work, true);
  else fft::transform_2d(work, m, true);
  std::vector<double> out(work.size());
  std::transform(work.begin(), work.end(), out.begin(), [](cplx v) { return v.real(); });
  return out;
}

double PeriodicField::max_abs() const {
  double m = 0.0;
  for (double v : samples_) m = std::max(m, std::abs(v));
  return m;
}

PeriodicField PeriodicField::plus_constant(double delta) const {
  std::vector<double> s = samples_;
  for (double& v : s) v += delta;
  return PeriodicField(dim_, resolution_, std::move(s));
}

MatrixField MatrixField::isotropic(const PeriodicField& a) {
  const int n = a.dim();
  std::vector<PeriodicField> e;
  const PeriodicField zero = PeriodicField::constant(n, a.resolution(), 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) e.push_back(i == j ? a : zero);
  return from_entries(n, std::move(e));
}

MatrixField MatrixField::from_entries(int dim, std::vector<PeriodicField> entries) {
  if (entries.size() != static_cast<std::size_t>(dim * dim))
    throw InputError("matrix field needs dim*dim entries");
  for (const auto& e : entries)
    if (e.dim() != dim || e.resolution() != entries.front().resolution())
      throw InputError("matrix field entries must share dimension and resolution");
  MatrixField f;
  f.dim_ = dim;
  f.entries_ = std::move(entries);
  return f;
}

Tensor2 MatrixField::at_node(std::size_t index) const {
  Tensor2 t = Tensor2::zero(dim_);
  for (int a = 0; a < dim_; ++a)
    for (int b = 0; b < dim_; ++b) t(a, b) = (*this)(a, b).samples()[index];
  return t;
}

Tensor2 MatrixField::evaluate(const Point& y) const {
  Tensor2 t = Tensor2::zero(dim_);
  for (int a = 0; a < dim_; ++a)
    for (int b = 0; b < dim_; ++b) t(a, b) = (*this)(a, b).evaluate(y);
  return t;
}

MatrixField MatrixField::translated(const Point& shift) const {
  std::vector<PeriodicField> e;
  for (const auto& f : entries_) {
    e.push_back(PeriodicField::from_rule(dim_, f.resolution(), [&](const Point& y) {
      Point z = y;
      for (int a = 0; a < dim_; ++a) z[a] += shift[a];
      return f.evaluate(z);
    }));
  }
  return from_entries(dim_, std::move(e));
}

double validate_coercivity(const MatrixField& sigma) {
  const int n = sigma.dim();
  const std::size_t nodes = sigma(0, 0).node_count();
  if (n == 2) {
    const auto s12 = sigma(0, 1).samples();
    const auto s21 = sigma(1, 0).samples();
    double scale = 1.0;
    for (std::size_t i = 0; i < nodes; ++i) scale = std::max(scale, std::abs(s12[i]));
    for (std::size_t i = 0; i < nodes; ++i)
      if (std::abs(s12[i] - s21[i]) > 1e-12 * scale)
        throw CoercivityError("diffusion tensor is not symmetric at node " + std::to_string(i));
  }
  double nu = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < nodes; ++i) nu = std::min(nu, sigma.at_node(i).min_eigenvalue());
  if (!(nu > 0.0))
    throw CoercivityError("diffusion tensor is not uniformly coercive (min eigenvalue " +
                          io::brief(nu) + ")");
  return nu;
}

MacroField::MacroField(MacroGrid grid) : grid_(grid), values_(grid.node_count(), cplx{}) {}

MacroField::MacroField(MacroGrid grid, CVector values, double boundary_tol)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.node_count()) throw InputError("macro field size does not match grid");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i].real()) || !std::isfinite(values_[i].imag()))
      throw InputError("non-finite value in macro field");
    if (grid_.is_boundary(i)) {
      if (std::abs(values_[i]) > boundary_tol)
        throw InputError("macro field violates the homogeneous Dirichlet condition at node " +
                         std::to_string(i));
      values_[i] = cplx{};
    }
  }
}

MacroField MacroField::from_expression(MacroGrid grid, const Expression& expr, double boundary_tol) {
  if (expr.depends_on_y())
    throw InputError("macroscopic data \"" + expr.text() + "\" must not depend on y");
  CVector v(grid.node_count());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = expr.at_x(grid.coordinate(i));
  return MacroField(grid, std::move(v), boundary_tol);
}

double l2_norm(const MacroGrid& grid, std::span<const cplx> values) {
  double s = 0.0;
  for (const auto& v : values) s += std::norm(v);
  return std::sqrt(s * grid.cell_volume());
}

double h1_seminorm(const MacroGrid& grid, std::span<const cplx> values) {
  const int n = grid.nodes_per_axis();
  const double inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
  double s = 0.0;
  if (grid.dim == 1) {
    for (int i = 0; i + 1 < n; ++i)
      s += std::norm(values[static_cast<std::size_t>(i + 1)] - values[static_cast<std::size_t>(i)]);
  } else {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const cplx u = values[grid.linear_index(i, j)];
        if (i + 1 < n) s += std::norm(values[grid.linear_index(i + 1, j)] - u);
        if (j + 1 < n) s += std::norm(values[grid.linear_index(i, j + 1)] - u);
      }
  }
  return std::sqrt(s * inv_h2 * grid.cell_volume());
}

double MacroField::l2_norm() const { return blochhom::l2_norm(grid_, values_); }
double MacroField::h1_seminorm() const { return blochhom::h1_seminorm(grid_, values_); }

TwoScaleField TwoScaleField::from_expression(const Expression& expr, MacroGrid grid, int dim,
                                             int resolution) {
  if (grid.dim != dim) throw InputError("two-scale field: macro and torus dimensions differ");
  if (expr.max_axis() > dim)
    throw InputError("expression \"" + expr.text() + "\" uses an axis beyond dimension " +
                     std::to_string(dim));
  TwoScaleField f;
  f.grid_ = grid;
  f.slices_.resize(grid.node_count());
  if (!expr.depends_on_x()) {
    auto shared = std::make_shared<const PeriodicField>(PeriodicField::from_expression(expr, dim, resolution));
    std::fill(f.slices_.begin(), f.slices_.end(), shared);
    return f;
  }
  for (std::size_t i = 0; i < f.slices_.size(); ++i) {
    const Point x = grid.coordinate(i);
    f.slices_[i] = std::make_shared<const PeriodicField>(PeriodicField::from_rule(
        dim, resolution, [&](const Point& y) { return expr(ExprArgs{x, y}); }));
  }
  return f;
}

double TwoScaleField::max_abs() const {
  double m = 0.0;
  const PeriodicField* last = nullptr;
  for (const auto& s : slices_) {
    if (s.get() == last) continue;
    last = s.get();
    m = std::max(m, s->max_abs());
  }
  return m;
}

void write_csv(std::ostream& out, const PeriodicField& field) {
  out << "node,value\n";
  const auto s = field.samples();
  for (std::size_t i = 0; i < s.size(); ++i) out << i << ',' << io::format_double(s[i]) << '\n';
}

}  // namespace blochhom
