#include "blochhom/pipeline.hpp"

#include "blochhom/expression.hpp"

namespace blochhom {

CellProblem make_cell_problem(const RunConfig& cfg, int cutoff) {
  const int m = cfg.resolution_for(cutoff);
  const auto field = [&](const std::string& text) {
    return PeriodicField::from_expression(Expression::parse(text), cfg.dim, m);
  };
  MatrixField sigma = cfg.dim == 1
                          ? MatrixField::isotropic(field(cfg.sigma11))
                          : MatrixField::from_entries(2, {field(cfg.sigma11), field(cfg.sigma12), field(cfg.sigma12),
                                                          field(cfg.sigma22)});
  return CellProblem(std::move(sigma), field(cfg.c), cutoff);
}

MacroGrid make_grid(const RunConfig& cfg) { return MacroGrid{cfg.dim, cfg.grid}; }

Coefficients make_coefficients(const RunConfig& cfg, const CellProblem& problem, const MacroGrid& grid) {
  const int m = problem.potential().resolution();
  return Coefficients{problem.sigma(), problem.potential(),
                      TwoScaleField::from_expression(Expression::parse(cfg.d), grid, cfg.dim, m),
                      PeriodicField::from_expression(Expression::parse(cfg.g), cfg.dim, m)};
}

MacroField make_v0(const RunConfig& cfg, const MacroGrid& grid) {
  return MacroField::from_expression(grid, Expression::parse(cfg.v0));
}

CriticalOptions critical_options(const RunConfig& cfg) {
  CriticalOptions opt;
  opt.grad_tol = cfg.grad_tol;
  opt.gap_tol = cfg.gap_tol;
  opt.band.step = cfg.fd_step;
  opt.band.gap_tol = cfg.gap_tol;
  return opt;
}

Certified certify(const RunConfig& cfg, const CellProblem& problem, const MacroGrid& grid, Stage stage) {
  const CriticalOptions opt = critical_options(cfg);
  Certified out;
  out.critical = find_critical_point(problem, cfg.band, cfg.theta, opt);
  out.pair = band_at(problem, cfg.band, out.critical.theta, opt.band.jacobi).pair;
  if (stage == Stage::critical) return out;

  out.correctors = solve_correctors(problem, out.pair);
  if (stage == Stage::correctors) return out;

  const Coefficients coeffs = make_coefficients(cfg, problem, grid);
  EffectiveOptions eopt;
  eopt.band = opt.band;
  out.model = build_effective_model(problem, out.critical, *out.correctors, out.pair, coeffs.d, coeffs.g, eopt);
  return out;
}

}  // namespace blochhom
