#include "blochhom/verify.hpp"

#include <algorithm>
#include <cmath>

#include "blochhom/error.hpp"
#include "blochhom/io.hpp"
#include "blochhom/pipeline.hpp"

namespace blochhom {

cplx phase_factor(PhaseMode mode, double lambda, double eps, double t) {
  const double s = lambda * t / (eps * eps);
  switch (mode) {
    case PhaseMode::gauge_shift: return 1.0;
    case PhaseMode::parabolic: return std::exp(-s);
    case PhaseMode::paper: return std::polar(1.0, s);
  }
  return 1.0;
}

ErrorValue factorization_error(const MacroGrid& grid, std::span<const cplx> u, std::span<const cplx> v,
                               const PlaneWaveBasis& basis, const BlochEigenpair& pair, double eps, double t,
                               PhaseMode mode) {
  if (u.size() != grid.node_count() || v.size() != grid.node_count())
    throw InputError("trajectories do not match the grid");
  const MacroField ansatz = prepare_initial_data(basis, pair, MacroField(grid, CVector(v.begin(), v.end())), eps);
  const cplx phase = phase_factor(mode, pair.eigenvalue, eps, t);
  CVector diff(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) diff[i] = u[i] - phase * ansatz[i];
  const double err = l2_norm(grid, diff);
  const double norm = l2_norm(grid, u);
  if (norm < 1e-14) return {err, false};
  return {err / norm, true};
}

namespace {

double trapezoid_weight(const MacroGrid& grid, std::size_t node) {
  const auto m = grid.multi_index(node);
  double w = 1.0;
  for (int a = 0; a < grid.dim; ++a) {
    const int v = m[static_cast<std::size_t>(a)];
    w *= (v == 0 || v == grid.cells) ? 0.5 * grid.spacing() : grid.spacing();
  }
  return w;
}

}  // namespace

cplx two_scale_pairing(const MacroGrid& grid, std::span<const cplx> w, const SeparableTest& psi_test, double eps) {
  if (w.size() != grid.node_count()) throw InputError("field does not match the grid");
  const int periods = validate_scale(grid, eps);
  const int cpp = grid.cells / periods;
  cplx s{};
  for (std::size_t i = 0; i < w.size(); ++i) {
    const Point x = grid.coordinate(i);
    const auto m = grid.multi_index(i);
    Point y = Point::zero(grid.dim);
    for (int a = 0; a < grid.dim; ++a)
      y[a] = static_cast<double>(m[static_cast<std::size_t>(a)] % cpp) / cpp;
    double psi = 0.0;
    for (const auto& term : psi_test) psi += term.a.at_x(x) * term.b.evaluate(y);
    s += trapezoid_weight(grid, i) * w[i] * psi;
  }
  return s;
}

cplx two_scale_limit(const MacroGrid& grid, std::span<const cplx> v, const SeparableTest& psi_test,
                     const PlaneWaveBasis& basis, const BlochEigenpair& pair) {
  cplx total{};
  for (const auto& term : psi_test) {
    cplx ax{};
    for (std::size_t i = 0; i < v.size(); ++i) ax += trapezoid_weight(grid, i) * term.a.at_x(grid.coordinate(i)) * v[i];
    cplx by{};
    for (std::size_t k = 0; k < basis.size(); ++k) {
      const WaveVector w = basis.wave(k);
      by += pair.coeffs[k] * term.b.coefficient({-w[0], -w[1]});
    }
    total += ax * by;
  }
  return total;
}

MacroField oscillating_profile(const PlaneWaveBasis& basis, const BlochEigenpair& pair, const MacroField& v,
                               double eps) {
  BlochEigenpair periodic = pair;
  periodic.theta = Point::zero(pair.theta.dim);
  return prepare_initial_data(basis, periodic, v, eps);
}

double energy_functional(const FieldPath& path, double eps) {
  double sup = 0.0, integral = 0.0;
  for (std::size_t m = 0; m < path.l2.size(); ++m) {
    sup = std::max(sup, path.l2[m] * path.l2[m]);
    if (m + 1 < path.l2.size()) integral += path.dt * (path.l2[m] * path.l2[m] + path.h1[m] * path.h1[m]);
  }
  return sup + eps * eps * integral;
}

EnergyStatistic energy_check(const std::vector<const FieldPath*>& paths, double eps, std::size_t min_paths) {
  if (paths.size() < min_paths)
    throw InputError("energy statistic needs at least " + std::to_string(min_paths) + " paths, got " +
                     std::to_string(paths.size()));
  EnergyStatistic s;
  s.eps = eps;
  const double n = static_cast<double>(paths.size());
  for (const FieldPath* p : paths) s.per_path.push_back(energy_functional(*p, eps));
  for (double v : s.per_path) s.mean += v / n;
  double var = 0.0;
  for (double v : s.per_path) var += (v - s.mean) * (v - s.mean);
  if (paths.size() > 1) s.std_error = std::sqrt(var / (n - 1.0) / n);
  if (!paths.empty() && !paths.front()->l2.empty()) s.initial_norm_sq = paths.front()->l2.front() * paths.front()->l2.front();
  return s;
}

bool monotone_decreasing(const std::vector<double>& values, double floor) {
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] <= floor && values[i - 1] <= floor) continue;
    if (!(values[i] < values[i - 1])) return false;
  }
  return true;
}

double empirical_rate(const std::vector<double>& eps, const std::vector<double>& values) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < eps.size() && i < values.size(); ++i) {
    if (!(values[i] > 0.0)) continue;
    const double x = std::log(eps[i]), y = std::log(values[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) return 0.0;
  const double dn = static_cast<double>(n);
  const double den = dn * sxx - sx * sx;
  return den == 0.0 ? 0.0 : (dn * sxy - sx * sy) / den;
}

bool VerificationReport::passed() const {
  if (!complete) return false;
  return std::all_of(assertions.begin(), assertions.end(), [](const Assertion& a) { return a.passed; });
}

namespace {

void run_sweep(const RunConfig& cfg, Exec exec, VerificationReport& rep) {
  const CellProblem problem = make_cell_problem(cfg);
  const MacroGrid grid = make_grid(cfg);
  const Certified cert = certify(cfg, problem, grid, Stage::effective);
  const EffectiveModel& model = *cert.model;
  rep.eigenvalue = model.eigenvalue;
  rep.sigma_star = model.sigma_star;
  rep.g_star = model.g_star;

  const Coefficients coeffs = make_coefficients(cfg, problem, grid);
  const MacroField v0 = make_v0(cfg, grid);
  const std::size_t steps = step_count(cfg.T, cfg.dt);
  const double shift = cfg.phase_mode == PhaseMode::gauge_shift ? model.eigenvalue : 0.0;
  const ImexStepper effective(effective_operator_data(model), cfg.dt);

  const std::size_t n_eps = cfg.eps.size();
  const std::size_t n_seeds = rep.seeds.size();
  const std::size_t n_snap = cfg.snapshots.size();
  // errors[s][t][e]
  std::vector<std::vector<std::vector<double>>> errors(n_seeds,
                                                       std::vector<std::vector<double>>(n_snap, std::vector<double>(n_eps)));
  std::vector<double> final_mean(n_eps, 0.0);

  for (std::size_t e = 0; e < n_eps; ++e) {
    const double eps = cfg.eps[e];
    const ImexStepper fine(build_fine_problem(coeffs, grid, eps, shift).data, cfg.dt);
    const MacroField u0 = prepare_initial_data(problem.basis(), cert.pair, v0, eps);
    const auto runs = run_ensemble(fine, effective, u0, v0, rep.seeds, steps, cfg.snapshots, exec);

    for (std::size_t s = 0; s < n_seeds; ++s)
      for (std::size_t t = 0; t < n_snap; ++t) {
        const ErrorValue ev = factorization_error(grid, runs[s].fine.snapshots[t], runs[s].effective.snapshots[t],
                                                  problem.basis(), cert.pair, eps, cfg.snapshots[t], cfg.phase_mode);
        errors[s][t][e] = ev.value;
        rep.factorization.push_back({eps, rep.seeds[s], cfg.snapshots[t], ev.value, ev.relative});
        if (t + 1 == n_snap) final_mean[e] += ev.value / static_cast<double>(n_seeds);
      }

    if (n_seeds >= 16) {
      std::vector<const FieldPath*> fine_paths;
      for (const auto& r : runs) fine_paths.push_back(&r.fine);
      rep.energy.push_back(energy_check(fine_paths, eps));
    }
  }
  rep.energy_skipped = n_seeds < 16;
  rep.rate = empirical_rate(cfg.eps, final_mean);

  bool all_monotone = true;
  for (std::size_t s = 0; s < n_seeds; ++s)
    for (std::size_t t = 0; t < n_snap; ++t) {
      if (!(cfg.snapshots[t] > 0.0)) continue;
      const bool ok = monotone_decreasing(errors[s][t], cfg.error_floor);
      all_monotone = all_monotone && ok;
      rep.monotone.push_back({rep.seeds[s], cfg.snapshots[t], errors[s][t], ok});
    }
  rep.assertions.push_back({"factorization error decreases in eps", all_monotone,
                            n_eps < 2 ? "single eps" : "per seed and snapshot time, floor " +
                                                           io::brief(cfg.error_floor)});

  if (!rep.energy_skipped) {
    double lo = rep.energy.front().mean, hi = lo;
    bool bounded = true;
    for (const auto& st : rep.energy) {
      lo = std::min(lo, st.mean);
      hi = std::max(hi, st.mean);
      bounded = bounded && st.mean <= cfg.energy_factor * st.initial_norm_sq;
    }
    rep.c_t = hi;
    rep.energy_ratio = lo > 0.0 ? hi / lo : (hi > 0.0 ? INFINITY : 1.0);
    rep.assertions.push_back({"energy statistic uniform in eps", rep.energy_ratio < cfg.energy_factor,
                              "max/min ratio " + io::brief(rep.energy_ratio)});
    rep.assertions.push_back({"energy statistic bounded by initial energy", bounded,
                              "factor " + io::brief(cfg.energy_factor)});
  }

  // Two-scale pairing of the exact ansatz against a(x) b(y).
  const SeparableTest test{{Expression::parse(cfg.pairing_a),
                            PeriodicField::from_expression(Expression::parse(cfg.pairing_b), cfg.dim,
                                                           problem.potential().resolution())}};
  const cplx limit = two_scale_limit(grid, v0.values(), test, problem.basis(), cert.pair);
  for (double eps : cfg.eps) {
    const MacroField w = oscillating_profile(problem.basis(), cert.pair, v0, eps);
    const cplx value = two_scale_pairing(grid, w.values(), test, eps);
    rep.pairing.push_back({eps, value, limit, std::abs(value - limit)});
  }

  if (!cfg.dt_sweep.empty()) {
    const double eps = cfg.eps.back();
    const ImexStepper base_fine(build_fine_problem(coeffs, grid, eps, shift).data, cfg.dt);
    const MacroField u0 = prepare_initial_data(problem.basis(), cert.pair, v0, eps);
    const NoisePath base = NoisePath::generate(rep.seeds.front(), cfg.dt, steps);
    std::vector<DtRow> rows(cfg.dt_sweep.size());
    parallel_for(cfg.dt_sweep.size(), exec, [&](std::size_t j) {
      const double dt = cfg.dt_sweep[j];
      const auto factor = static_cast<std::size_t>(std::round(dt / cfg.dt));
      const NoisePath path = base.coarsen(factor);
      const ImexStepper fine(base_fine.data(), path.dt());
      const ImexStepper eff(effective.data(), path.dt());
      const CoupledPaths run = run_coupled(fine, eff, u0, v0, path, {cfg.T});
      const ErrorValue ev = factorization_error(grid, run.fine.snapshots[0], run.effective.snapshots[0],
                                                problem.basis(), cert.pair, eps, cfg.T, cfg.phase_mode);
      rows[j] = {dt, ev.value};
    });
    rep.dt_sweep = rows;
  }

  if (!cfg.cutoff_sweep.empty()) {
    std::vector<CutoffRow> rows(cfg.cutoff_sweep.size());
    for (std::size_t j = 0; j < rows.size(); ++j) {
      const int k = cfg.cutoff_sweep[j];
      const CellProblem pk = make_cell_problem(cfg, k);
      const Certified ck = certify(cfg, pk, grid, Stage::effective);
      rows[j] = {k, ck.model->eigenvalue, ck.model->sigma_star, ck.model->route_error};
    }
    rep.cutoff_sweep = rows;
  }
}

nlohmann::ordered_json tensor_json(const Tensor2& t) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (int i = 0; i < t.dim; ++i) {
    std::vector<double> r;
    for (int j = 0; j < t.dim; ++j) r.push_back(t(i, j));
    rows.push_back(r);
  }
  return rows;
}

}  // namespace

VerificationReport convergence_sweep(const RunConfig& cfg, Exec exec) {
  VerificationReport rep;
  rep.eps = cfg.eps;
  rep.seeds = cfg.seeds();
  try {
    run_sweep(cfg, exec, rep);
  } catch (const InputError& e) {
    rep.complete = false;
    rep.failure = e.what();
    rep.failure_kind = "input";
  } catch (const Error& e) {
    rep.complete = false;
    rep.failure = e.what();
    rep.failure_kind = "numerical";
  }
  return rep;
}

nlohmann::ordered_json to_json(const VerificationReport& r) {
  using json = nlohmann::ordered_json;
  json j;
  j["complete"] = r.complete;
  j["passed"] = r.passed();
  if (!r.complete) {
    j["failure"] = r.failure;
    j["failure_kind"] = r.failure_kind;
  }
  j["eps"] = r.eps;
  j["seeds"] = r.seeds;
  j["eigenvalue"] = r.eigenvalue;
  j["sigma_star"] = tensor_json(r.sigma_star);
  j["g_star"] = r.g_star;
  json assertions = json::array();
  for (const auto& a : r.assertions) assertions.push_back({{"name", a.name}, {"passed", a.passed}, {"detail", a.detail}});
  j["assertions"] = assertions;

  json fact = json::array();
  for (const auto& f : r.factorization)
    fact.push_back({{"eps", f.eps}, {"seed", f.seed}, {"t", f.t}, {"error", f.error}, {"relative", f.relative}});
  j["factorization"] = fact;
  json mono = json::array();
  for (const auto& m : r.monotone)
    mono.push_back({{"seed", m.seed}, {"t", m.t}, {"errors", m.errors}, {"monotone", m.monotone}});
  j["monotone"] = mono;
  j["empirical_rate"] = r.rate;

  json energy;
  energy["skipped"] = r.energy_skipped;
  if (!r.energy_skipped) {
    json rows = json::array();
    for (const auto& e : r.energy)
      rows.push_back({{"eps", e.eps}, {"mean", e.mean}, {"std_error", e.std_error}, {"initial_norm_sq", e.initial_norm_sq}});
    energy["statistics"] = rows;
    energy["ratio"] = r.energy_ratio;
    energy["C_T"] = r.c_t;
  }
  j["energy"] = energy;

  json pairing = json::array();
  for (const auto& p : r.pairing)
    pairing.push_back({{"eps", p.eps},
                       {"value", {p.value.real(), p.value.imag()}},
                       {"limit", {p.limit.real(), p.limit.imag()}},
                       {"error", p.error}});
  j["pairing"] = pairing;
  json dts = json::array();
  for (const auto& d : r.dt_sweep) dts.push_back({{"dt", d.dt}, {"error", d.error}});
  j["dt_sweep"] = dts;
  json cuts = json::array();
  for (const auto& c : r.cutoff_sweep)
    cuts.push_back({{"cutoff", c.cutoff},
                    {"eigenvalue", c.eigenvalue},
                    {"sigma_star", tensor_json(c.sigma_star)},
                    {"route_error", c.route_error}});
  j["cutoff_sweep"] = cuts;
  return j;
}

}  // namespace blochhom
