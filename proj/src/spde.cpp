#include "blochhom/spde.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "blochhom/error.hpp"
#include "blochhom/io.hpp"

namespace blochhom {

NoisePath NoisePath::generate(std::uint64_t seed, double dt, std::size_t steps) {
  if (!(dt > 0.0)) throw InputError("time step must be positive");
  NoisePath p;
  p.seed_ = seed;
  p.dt_ = dt;
  p.increments_.resize(steps);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(dt));
  for (auto& v : p.increments_) v = normal(rng);
  return p;
}

NoisePath NoisePath::zero(double dt, std::size_t steps) {
  if (!(dt > 0.0)) throw InputError("time step must be positive");
  NoisePath p;
  p.dt_ = dt;
  p.increments_.assign(steps, 0.0);
  return p;
}

NoisePath NoisePath::coarsen(std::size_t factor) const {
  if (factor == 0 || steps() % factor != 0)
    throw InputError("coarsening factor must divide the number of steps");
  NoisePath p;
  p.seed_ = seed_;
  p.dt_ = dt_ * static_cast<double>(factor);
  p.increments_.resize(steps() / factor);
  for (std::size_t m = 0; m < p.increments_.size(); ++m) {
    double s = 0.0;
    for (std::size_t j = 0; j < factor; ++j) s += increments_[m * factor + j];
    p.increments_[m] = s;
  }
  return p;
}

std::size_t step_count(double T, double dt) {
  if (!(dt > 0.0) || !(T > 0.0)) throw InputError("T and dt must be positive");
  const double r = T / dt;
  const double n = std::round(r);
  if (n < 1.0 || std::abs(r - n) > 1e-9 * n)
    throw InputError("T = " + io::brief(T) + " is not a multiple of dt = " + io::brief(dt));
  return static_cast<std::size_t>(n);
}

int validate_scale(const MacroGrid& grid, double eps) {
  if (!(eps > 0.0) || eps > 1.0) throw InputError("eps must lie in (0, 1]");
  const double inv = 1.0 / eps;
  const double r = std::round(inv);
  if (std::abs(inv - r) > 1e-9 * r)
    throw InputError("1/eps must be a positive integer (eps = " + io::brief(eps) + ")");
  const int periods = static_cast<int>(r);
  if (grid.cells % periods != 0)
    throw InputError("grid P = " + std::to_string(grid.cells) + " is not a multiple of 1/eps = " +
                     std::to_string(periods));
  if (grid.cells / periods < 16)
    throw InputError("grid P = " + std::to_string(grid.cells) + " resolves eps = " + io::brief(eps) +
                     " with fewer than 16 cells per period");
  return periods;
}

namespace {

// Position of a grid node inside its period cell, in units of the period.
Point torus_point(const MacroGrid& grid, std::size_t node, int cells_per_period) {
  const auto m = grid.multi_index(node);
  Point y = Point::zero(grid.dim);
  for (int a = 0; a < grid.dim; ++a)
    y[a] = static_cast<double>(m[static_cast<std::size_t>(a)] % cells_per_period) / cells_per_period;
  return y;
}

std::size_t residue_key(const MacroGrid& grid, std::size_t node, int cells_per_period) {
  const auto m = grid.multi_index(node);
  return static_cast<std::size_t>(m[0] % cells_per_period) * static_cast<std::size_t>(cells_per_period) +
         static_cast<std::size_t>(m[1] % cells_per_period);
}

}  // namespace

FineProblem build_fine_problem(const Coefficients& coeffs, const MacroGrid& grid, double eps,
                               double potential_shift) {
  if (coeffs.sigma.dim() != grid.dim || coeffs.c.dim() != grid.dim || coeffs.g.dim() != grid.dim)
    throw InputError("coefficient and grid dimensions differ");
  if (!(coeffs.d.grid() == grid)) throw InputError("d(x, y) is sampled on a different macroscopic grid");
  const int periods = validate_scale(grid, eps);
  const int cpp = grid.cells / periods;

  FineProblem fp;
  fp.eps = eps;
  fp.potential_shift = potential_shift;
  fp.data.grid = grid;
  const std::size_t n = grid.node_count();
  fp.data.sigma.resize(n);
  fp.data.q.resize(n);
  fp.data.g.resize(n);

  struct Cell {
    Tensor2 sigma;
    double c, g;
  };
  std::map<std::size_t, Cell> cache;
  const double inv_eps2 = 1.0 / (eps * eps);
  for (std::size_t i = 0; i < n; ++i) {
    const Point y = torus_point(grid, i, cpp);
    auto [it, fresh] = cache.try_emplace(residue_key(grid, i, cpp));
    if (fresh) it->second = Cell{coeffs.sigma.evaluate(y), coeffs.c.evaluate(y), coeffs.g.evaluate(y)};
    fp.data.sigma[i] = it->second.sigma;
    fp.data.q[i] = inv_eps2 * (it->second.c - potential_shift) + coeffs.d.evaluate(i, y);
    fp.data.g[i] = it->second.g;
  }
  return fp;
}

MacroOperatorData effective_operator_data(const EffectiveModel& model) {
  if (!model.positive_definite)
    throw DefinitenessError("sigma* is not positive definite (critical point is a " + to_string(model.kind) +
                            "); the effective equation is not parabolic");
  MacroOperatorData data;
  data.grid = model.d_star.grid;
  const std::size_t n = data.grid.node_count();
  data.sigma.assign(n, model.sigma_star);
  data.q = model.d_star.values;
  data.g.assign(n, model.g_star);
  return data;
}

namespace {

// Calls fn(neighbor_node, coefficient) for every entry of row `node` of L.
template <class Fn>
void visit_row(const MacroOperatorData& d, std::size_t node, Fn&& fn) {
  const MacroGrid& grid = d.grid;
  const double inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
  const auto m = grid.multi_index(node);
  auto at = [&](int di, int dj) { return grid.linear_index(m[0] + di, m[1] + dj); };

  double diag = d.q[node];
  for (int a = 0; a < grid.dim; ++a) {
    const int di = a == 0 ? 1 : 0, dj = a == 1 ? 1 : 0;
    const std::size_t plus = at(di, dj), minus = at(-di, -dj);
    const double sp = 0.5 * (d.sigma[node](a, a) + d.sigma[plus](a, a));
    const double sm = 0.5 * (d.sigma[node](a, a) + d.sigma[minus](a, a));
    diag += (sp + sm) * inv_h2;
    fn(plus, -sp * inv_h2);
    fn(minus, -sm * inv_h2);
  }
  if (grid.dim == 2) {
    const double w = 0.25 * inv_h2;
    auto s12 = [&](int di, int dj) { return d.sigma[at(di, dj)](0, 1); };
    auto s21 = [&](int di, int dj) { return d.sigma[at(di, dj)](1, 0); };
    fn(at(1, 1), -w * (s12(1, 0) + s21(0, 1)));
    fn(at(1, -1), w * (s12(1, 0) + s21(0, -1)));
    fn(at(-1, 1), w * (s12(-1, 0) + s21(0, 1)));
    fn(at(-1, -1), -w * (s12(-1, 0) + s21(0, -1)));
  }
  fn(node, diag);
}

struct InteriorNumbering {
  std::vector<std::size_t> nodes;   // interior index -> node
  std::vector<long> index;          // node -> interior index or -1
};

InteriorNumbering number_interior(const MacroGrid& grid) {
  InteriorNumbering num;
  num.index.assign(grid.node_count(), -1);
  for (std::size_t i = 0; i < grid.node_count(); ++i)
    if (!grid.is_boundary(i)) {
      num.index[i] = static_cast<long>(num.nodes.size());
      num.nodes.push_back(i);
    }
  return num;
}

void check_data(const MacroOperatorData& d) {
  if (d.grid.cells < 2) throw InputError("macroscopic grid needs at least 2 cells per axis");
  const std::size_t n = d.grid.node_count();
  if (d.sigma.size() != n || d.q.size() != n || d.g.size() != n)
    throw InputError("operator data does not match the grid");
}

}  // namespace

BandedSymmetric assemble_macro_matrix(const MacroOperatorData& data, double dt) {
  check_data(data);
  const InteriorNumbering num = number_interior(data.grid);
  const std::size_t interior_per_axis = static_cast<std::size_t>(data.grid.cells - 1);
  const std::size_t bw = data.grid.dim == 1 ? 1 : interior_per_axis + 1;
  BandedSymmetric a(num.nodes.size(), bw);
  for (std::size_t r = 0; r < num.nodes.size(); ++r) {
    const std::size_t node = num.nodes[r];
    visit_row(data, node, [&](std::size_t nb, double coef) {
      const long s = num.index[nb];
      if (s < 0 || static_cast<std::size_t>(s) > r) return;
      a.lower(r, static_cast<std::size_t>(s)) += dt * coef;
    });
    a.lower(r, r) += 1.0;
  }
  return a;
}

CVector apply_macro_operator(const MacroOperatorData& data, std::span<const cplx> u) {
  check_data(data);
  CVector out(u.size(), cplx{});
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (data.grid.is_boundary(i)) continue;
    cplx s{};
    visit_row(data, i, [&](std::size_t nb, double coef) {
      if (!data.grid.is_boundary(nb)) s += coef * u[nb];
    });
    out[i] = s;
  }
  return out;
}

ImexStepper::ImexStepper(MacroOperatorData data, double dt)
    : data_(std::move(data)), dt_(dt), matrix_(assemble_macro_matrix(data_, dt)) {
  if (!(dt > 0.0)) throw InputError("time step must be positive");
  matrix_.factorize();
  interior_ = number_interior(data_.grid).nodes;
}

void ImexStepper::step(CVector& u, double dW) const {
  CVector rhs(interior_.size());
  for (std::size_t r = 0; r < interior_.size(); ++r) {
    const std::size_t i = interior_[r];
    rhs[r] = u[i] - data_.g[i] * u[i] * dW;
  }
  matrix_.solve_in_place(rhs);
  for (std::size_t r = 0; r < interior_.size(); ++r) u[interior_[r]] = rhs[r];
}

MacroField prepare_initial_data(const PlaneWaveBasis& basis, const BlochEigenpair& pair, const MacroField& v0,
                                double eps) {
  const MacroGrid& grid = v0.grid();
  const int periods = validate_scale(grid, eps);
  const int cpp = grid.cells / periods;
  std::map<std::size_t, cplx> cache;
  CVector u(grid.node_count(), cplx{});
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (grid.is_boundary(i) || v0[i] == cplx{}) continue;
    const Point y = torus_point(grid, i, cpp);
    auto [it, fresh] = cache.try_emplace(residue_key(grid, i, cpp));
    if (fresh) it->second = pair.evaluate(basis, y);
    const auto m = grid.multi_index(i);
    double phase = 0.0;
    for (int a = 0; a < grid.dim; ++a)
      phase += pair.theta[a] * static_cast<double>(m[static_cast<std::size_t>(a)]) / cpp;
    u[i] = it->second * std::polar(1.0, kTwoPi * phase) * v0[i];
  }
  return MacroField(grid, std::move(u));
}

std::vector<std::size_t> snapshot_steps(const std::vector<double>& times, double dt, std::size_t steps) {
  std::vector<std::size_t> out;
  for (double t : times) {
    const double r = t / dt;
    const double m = std::round(r);
    if (t < 0.0 || std::abs(r - m) > 1e-9 * std::max(1.0, m) || m > static_cast<double>(steps))
      throw InputError("snapshot time " + io::brief(t) + " is not a step time in [0, T]");
    out.push_back(static_cast<std::size_t>(m));
  }
  return out;
}

FieldPath run_path(const ImexStepper& stepper, const MacroField& u0, const NoisePath& path,
                   const std::vector<double>& snapshot_times) {
  if (!(u0.grid() == stepper.grid())) throw InputError("initial data lives on a different grid");
  if (std::abs(path.dt() - stepper.dt()) > 1e-12 * stepper.dt())
    throw InputError("noise path and stepper use different time steps");
  const std::vector<std::size_t> snaps = snapshot_steps(snapshot_times, stepper.dt(), path.steps());

  FieldPath fp;
  fp.grid = stepper.grid();
  fp.dt = stepper.dt();
  fp.times = snapshot_times;
  fp.snapshots.resize(snaps.size());
  fp.l2.reserve(path.steps() + 1);
  fp.h1.reserve(path.steps() + 1);

  CVector u(u0.values().begin(), u0.values().end());
  auto record = [&](std::size_t m) {
    fp.l2.push_back(l2_norm(fp.grid, u));
    fp.h1.push_back(h1_seminorm(fp.grid, u));
    for (std::size_t s = 0; s < snaps.size(); ++s)
      if (snaps[s] == m) fp.snapshots[s] = u;
  };
  record(0);
  for (std::size_t m = 0; m < path.steps(); ++m) {
    stepper.step(u, path.increment(m));
    record(m + 1);
  }
  return fp;
}

CoupledPaths run_coupled(const ImexStepper& fine, const ImexStepper& effective, const MacroField& u0,
                         const MacroField& v0, const NoisePath& path, const std::vector<double>& snapshot_times) {
  return CoupledPaths{run_path(fine, u0, path, snapshot_times), run_path(effective, v0, path, snapshot_times)};
}

std::vector<CoupledPaths> run_ensemble(const ImexStepper& fine, const ImexStepper& effective, const MacroField& u0,
                                       const MacroField& v0, const std::vector<std::uint64_t>& seeds,
                                       std::size_t steps, const std::vector<double>& snapshot_times, Exec exec) {
  std::vector<CoupledPaths> out(seeds.size());
  parallel_for(seeds.size(), exec, [&](std::size_t s) {
    const NoisePath path = NoisePath::generate(seeds[s], fine.dt(), steps);
    out[s] = run_coupled(fine, effective, u0, v0, path, snapshot_times);
  });
  return out;
}

}  // namespace blochhom
