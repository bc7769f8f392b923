#pragma once

#include <optional>

#include "blochhom/config.hpp"
#include "blochhom/effective.hpp"
#include "blochhom/spde.hpp"

namespace blochhom {

/// sigma and c of the configuration sampled for a given plane-wave cutoff.
CellProblem make_cell_problem(const RunConfig& cfg, int cutoff);
inline CellProblem make_cell_problem(const RunConfig& cfg) { return make_cell_problem(cfg, cfg.cutoff); }

MacroGrid make_grid(const RunConfig& cfg);
Coefficients make_coefficients(const RunConfig& cfg, const CellProblem& problem, const MacroGrid& grid);
MacroField make_v0(const RunConfig& cfg, const MacroGrid& grid);

CriticalOptions critical_options(const RunConfig& cfg);

/// Everything downstream of the cell problem at the configured band.
struct Certified {
  CriticalPoint critical;
  BlochEigenpair pair;
  std::optional<CorrectorSet> correctors;
  std::optional<EffectiveModel> model;
};

enum class Stage { critical, correctors, effective };

/// Runs the cell pipeline up to `stage`; errors propagate unchanged.
Certified certify(const RunConfig& cfg, const CellProblem& problem, const MacroGrid& grid, Stage stage);

}  // namespace blochhom
