#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "blochhom/config.hpp"
#include "blochhom/expression.hpp"
#include "blochhom/spde.hpp"

namespace blochhom {

/// Time factor multiplying the Bloch ansatz in each phase mode:
/// gauge-shift 1, parabolic exp(-lambda t / eps^2), paper exp(i lambda t / eps^2).
cplx phase_factor(PhaseMode mode, double lambda, double eps, double t);

struct ErrorValue {
  double value = 0.0;
  bool relative = true;  // false when ||u|| < 1e-14 and the absolute error is reported
};

/// || u - phase(t) e^{2 i pi theta.x/eps} psi_n(x/eps) v || / || u ||.
ErrorValue factorization_error(const MacroGrid& grid, std::span<const cplx> u, std::span<const cplx> v,
                               const PlaneWaveBasis& basis, const BlochEigenpair& pair, double eps, double t,
                               PhaseMode mode);

/// Test function sum_r a_r(x) b_r(y).
struct SeparableTerm {
  Expression a;
  PeriodicField b;
};
using SeparableTest = std::vector<SeparableTerm>;

/// Trapezoid-rule quadrature of int_D w(x) Psi(x, x/eps) dx on the grid nodes.
cplx two_scale_pairing(const MacroGrid& grid, std::span<const cplx> w, const SeparableTest& psi_test, double eps);

/// int_D int_T psi_n(y) v(x) Psi(x, y) dy dx, the y-integral exact in Fourier
/// space and the x-integral by the same trapezoid rule.
cplx two_scale_limit(const MacroGrid& grid, std::span<const cplx> v, const SeparableTest& psi_test,
                     const PlaneWaveBasis& basis, const BlochEigenpair& pair);

/// psi_n(x/eps) v(x) at the grid nodes (no Bloch phase).
MacroField oscillating_profile(const PlaneWaveBasis& basis, const BlochEigenpair& pair, const MacroField& v,
                               double eps);

/// sup_m ||u_m||^2 + eps^2 sum_m dt ||u_m||_{H^1}^2 along one path.
double energy_functional(const FieldPath& path, double eps);

struct EnergyStatistic {
  double eps = 0.0;
  double mean = 0.0;
  double std_error = 0.0;
  double initial_norm_sq = 0.0;
  std::vector<double> per_path;
};

/// Monte-Carlo estimate over an ensemble; throws InputError with fewer than
/// `min_paths` paths.
EnergyStatistic energy_check(const std::vector<const FieldPath*>& paths, double eps, std::size_t min_paths = 16);

/// Strictly decreasing sequence; consecutive values both at or below `floor`
/// count as converged.
bool monotone_decreasing(const std::vector<double>& values, double floor);

/// Least-squares slope of log(value) against log(eps).
double empirical_rate(const std::vector<double>& eps, const std::vector<double>& values);

struct FactorizationRow {
  double eps;
  std::uint64_t seed;
  double t;
  double error;
  bool relative;
};

struct MonotoneRow {
  std::uint64_t seed;
  double t;
  std::vector<double> errors;  // one per eps, in sweep order
  bool monotone;
};

struct PairingRow {
  double eps;
  cplx value;
  cplx limit;
  double error;
};

struct DtRow {
  double dt;
  double error;
};

struct CutoffRow {
  int cutoff;
  double eigenvalue;
  Tensor2 sigma_star;
  double route_error;
};

struct Assertion {
  std::string name;
  bool passed;
  std::string detail;
};

struct VerificationReport {
  bool complete = true;
  std::string failure;
  std::string failure_kind;  // "input" or "numerical" when incomplete

  std::vector<double> eps;
  std::vector<std::uint64_t> seeds;
  double eigenvalue = 0.0;
  Tensor2 sigma_star;
  double g_star = 0.0;

  std::vector<FactorizationRow> factorization;
  std::vector<MonotoneRow> monotone;
  double rate = 0.0;  // reported, not asserted

  bool energy_skipped = false;
  std::vector<EnergyStatistic> energy;
  double energy_ratio = 0.0;
  double c_t = 0.0;

  std::vector<PairingRow> pairing;
  std::vector<DtRow> dt_sweep;
  std::vector<CutoffRow> cutoff_sweep;

  std::vector<Assertion> assertions;

  bool passed() const;
};

/// Runs every eps of the configuration with all seeds under coupled noise and
/// collects the statistics. Upstream errors stop the sweep and are recorded.
VerificationReport convergence_sweep(const RunConfig& cfg, Exec exec = Exec::parallel);

nlohmann::ordered_json to_json(const VerificationReport& report);

}  // namespace blochhom
