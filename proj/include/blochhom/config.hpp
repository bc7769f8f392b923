#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "blochhom/types.hpp"

namespace blochhom {

enum class PhaseMode { gauge_shift, parabolic, paper };
std::string to_string(PhaseMode mode);
PhaseMode parse_phase_mode(std::string_view text);

/// Validated run configuration.
///
/// Text format: one `key = value` per line, `#` starts a comment. Lists are
/// comma-separated; numeric entries accept constant expressions (`1/16`).
struct RunConfig {
  std::string text;  // verbatim input

  int dim = 1;
  // Coefficient expressions. sigma12 is ignored in one dimension.
  std::string sigma11 = "1";
  std::string sigma12 = "0";
  std::string sigma22 = "1";
  std::string c = "0";
  std::string d = "0";
  std::string g = "0";
  std::string v0;  // defaults to the first Dirichlet sine mode

  int cutoff = 32;
  int resolution = 0;  // 0: smallest power of two >= max(8, 4 cutoff)
  int grid = 256;
  int band = 1;
  Point theta = Point::zero(1);

  std::vector<double> eps{1.0};
  double dt = 1e-4;
  double T = 0.1;
  std::uint64_t seed = 1;
  int paths = 1;
  std::vector<double> snapshots;  // defaults to {T}

  PhaseMode phase_mode = PhaseMode::gauge_shift;
  double grad_tol = 1e-8;
  double gap_tol = 1e-6;
  double fd_step = 1e-3;
  double energy_factor = 10.0;
  double error_floor = 1e-8;

  int bands_points = 33;
  int bands_count = 4;
  std::string pairing_a = "1";  // test function a(x) b(y)
  std::string pairing_b = "1";
  std::vector<int> cutoff_sweep;
  std::vector<double> dt_sweep;

  std::string output = "out";
  int threads = 0;

  std::vector<std::uint64_t> seeds() const;
  /// Resolution actually used for a given cutoff.
  int resolution_for(int cutoff) const;
  nlohmann::ordered_json resolved() const;
};

/// Parses and validates. Throws InputError with the line number on syntax
/// errors and the key name on validation failures.
RunConfig parse_config(std::string_view text);

/// Re-runs validation, e.g. after command-line overrides.
void validate(RunConfig& config);

}  // namespace blochhom
