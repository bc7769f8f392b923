#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "blochhom/effective.hpp"
#include "blochhom/fields.hpp"
#include "blochhom/linalg.hpp"

namespace blochhom {

/// Discrete increments of a real Wiener process, W(m dt) - W((m-1) dt).
class NoisePath {
 public:
  /// Increments drawn from N(0, dt) with std::mt19937_64 seeded by `seed`.
  static NoisePath generate(std::uint64_t seed, double dt, std::size_t steps);
  /// Path with zero increments.
  static NoisePath zero(double dt, std::size_t steps);

  /// Same Brownian path on a grid `factor` times coarser (increments summed).
  NoisePath coarsen(std::size_t factor) const;

  std::uint64_t seed() const { return seed_; }
  double dt() const { return dt_; }
  std::size_t steps() const { return increments_.size(); }
  double horizon() const { return dt_ * static_cast<double>(steps()); }
  double increment(std::size_t m) const { return increments_[m]; }
  const std::vector<double>& increments() const { return increments_; }

 private:
  std::uint64_t seed_ = 0;
  double dt_ = 0.0;
  std::vector<double> increments_;
};

/// Number of steps of size dt covering [0, T]; throws InputError unless T/dt
/// is an integer to 1e-9 relative.
std::size_t step_count(double T, double dt);

/// Coefficients of the fine equation as periodic fields on the unit torus.
struct Coefficients {
  MatrixField sigma;
  PeriodicField c;
  TwoScaleField d;
  PeriodicField g;
};

/// Checks that 1/eps is a positive integer, P is a multiple of it and that
/// P*eps >= 16 grid cells resolve each period. Returns 1/eps.
int validate_scale(const MacroGrid& grid, double eps);

/// Nodal coefficient samples of a macroscopic operator
/// -div(sigma grad) + q and noise factor g.
struct MacroOperatorData {
  MacroGrid grid;
  std::vector<Tensor2> sigma;  // per node
  std::vector<double> q;       // per node
  std::vector<double> g;       // per node
};

/// Fine problem at scale eps: sigma(x/eps), eps^-2 (c(x/eps) - shift) + d(x, x/eps)
/// and g(x/eps) sampled at the grid nodes. The shift is lambda_n(theta^n) in
/// gauge-shift mode and 0 otherwise.
struct FineProblem {
  double eps = 1.0;
  double potential_shift = 0.0;
  MacroOperatorData data;
};

FineProblem build_fine_problem(const Coefficients& coeffs, const MacroGrid& grid, double eps,
                               double potential_shift = 0.0);

/// Constant sigma*, d*(x), g* of the effective equation. Throws
/// DefinitenessError unless sigma* is positive definite.
MacroOperatorData effective_operator_data(const EffectiveModel& model);

/// Sparse pattern of I + dt L with L = -div(sigma grad) + q on interior nodes,
/// centered differences, half-node averages for the diagonal conductivities
/// and a symmetric central stencil for mixed derivatives.
BandedSymmetric assemble_macro_matrix(const MacroOperatorData& data, double dt);

/// L u for a full nodal vector (boundary entries are ignored and returned as 0).
CVector apply_macro_operator(const MacroOperatorData& data, std::span<const cplx> u);

/// IMEX Euler-Maruyama: (I + dt L) u_{m+1} = u_m - g u_m dW_m, Ito form.
class ImexStepper {
 public:
  ImexStepper(MacroOperatorData data, double dt);

  double dt() const { return dt_; }
  const MacroGrid& grid() const { return data_.grid; }
  const MacroOperatorData& data() const { return data_; }
  double min_pivot() const { return matrix_.min_pivot(); }

  void step(CVector& u, double dW) const;

 private:
  MacroOperatorData data_;
  double dt_;
  BandedSymmetric matrix_;
  std::vector<std::size_t> interior_;
};

/// psi_n(x/eps) exp(2 i pi theta.x/eps) v0(x) at the grid nodes.
MacroField prepare_initial_data(const PlaneWaveBasis& basis, const BlochEigenpair& pair, const MacroField& v0,
                                double eps);

/// Snapshots of one trajectory plus norms after every step.
struct FieldPath {
  MacroGrid grid;
  double dt = 0.0;
  std::vector<double> times;
  std::vector<CVector> snapshots;
  std::vector<double> l2;  // steps + 1 entries, index m at time m dt
  std::vector<double> h1;  // forward-difference seminorm, same indexing
};

/// Step indices of the requested times; each must be a multiple of dt in [0, T].
std::vector<std::size_t> snapshot_steps(const std::vector<double>& times, double dt, std::size_t steps);

FieldPath run_path(const ImexStepper& stepper, const MacroField& u0, const NoisePath& path,
                   const std::vector<double>& snapshot_times);

struct CoupledPaths {
  FieldPath fine;
  FieldPath effective;
};

/// Fine and effective trajectories driven by the same increments.
CoupledPaths run_coupled(const ImexStepper& fine, const ImexStepper& effective, const MacroField& u0,
                         const MacroField& v0, const NoisePath& path, const std::vector<double>& snapshot_times);

/// Independent coupled runs for each seed, concurrently under Exec::parallel.
std::vector<CoupledPaths> run_ensemble(const ImexStepper& fine, const ImexStepper& effective, const MacroField& u0,
                                       const MacroField& v0, const std::vector<std::uint64_t>& seeds,
                                       std::size_t steps, const std::vector<double>& snapshot_times,
                                       Exec exec = Exec::parallel);

}  // namespace blochhom
