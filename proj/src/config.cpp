#include "blochhom/config.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "blochhom/error.hpp"
#include "blochhom/expression.hpp"
#include "blochhom/fft.hpp"
#include "blochhom/fields.hpp"
#include "blochhom/spde.hpp"

namespace blochhom {

std::string to_string(PhaseMode mode) {
  switch (mode) {
    case PhaseMode::gauge_shift: return "gauge-shift";
    case PhaseMode::parabolic: return "parabolic";
    case PhaseMode::paper: return "paper";
  }
  return "gauge-shift";
}

PhaseMode parse_phase_mode(std::string_view text) {
  if (text == "gauge-shift") return PhaseMode::gauge_shift;
  if (text == "parabolic") return PhaseMode::parabolic;
  if (text == "paper") return PhaseMode::paper;
  throw InputError("phase_mode must be gauge-shift, parabolic or paper (got \"" + std::string(text) + "\")");
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

[[noreturn]] void fail(const std::string& key, int line, const std::string& why) {
  throw InputError("config key '" + key + "' (line " + std::to_string(line) + "): " + why);
}

double number(const std::string& key, int line, const std::string& v) {
  try {
    const Expression e = Expression::parse(v);
    if (e.depends_on_x() || e.depends_on_y()) fail(key, line, "expected a constant");
    const double r = e(ExprArgs{});
    if (!std::isfinite(r)) fail(key, line, "value is not finite");
    return r;
  } catch (const InputError& err) {
    if (std::string(err.what()).rfind("config key", 0) == 0) throw;
    fail(key, line, err.what());
  }
}

long integer(const std::string& key, int line, const std::string& v) {
  const double r = number(key, line, v);
  if (std::abs(r - std::round(r)) > 0.0 || std::abs(r) > 1e15) fail(key, line, "expected an integer");
  return static_cast<long>(std::round(r));
}

std::uint64_t unsigned64(const std::string& key, int line, const std::string& v) {
  std::uint64_t out = 0;
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
    fail(key, line, "expected a non-negative integer");
  try {
    out = std::stoull(v);
  } catch (const std::exception&) {
    fail(key, line, "integer out of range");
  }
  return out;
}

void check_expression(const std::string& key, int line, const std::string& v) {
  try {
    (void)Expression::parse(v);
  } catch (const InputError& e) {
    fail(key, line, e.what());
  }
}

}  // namespace

std::vector<std::uint64_t> RunConfig::seeds() const {
  std::vector<std::uint64_t> s;
  for (int i = 0; i < paths; ++i) s.push_back(seed + static_cast<std::uint64_t>(i));
  return s;
}

int RunConfig::resolution_for(int k) const {
  if (resolution > 0) return resolution;
  int m = 8;
  while (m < 4 * k) m *= 2;
  return m;
}

nlohmann::ordered_json RunConfig::resolved() const {
  nlohmann::ordered_json j;
  j["dim"] = dim;
  j["sigma11"] = sigma11;
  if (dim == 2) {
    j["sigma12"] = sigma12;
    j["sigma22"] = sigma22;
  }
  j["c"] = c;
  j["d"] = d;
  j["g"] = g;
  j["v0"] = v0;
  j["cutoff"] = cutoff;
  j["resolution"] = resolution_for(cutoff);
  j["grid"] = grid;
  j["band"] = band;
  std::vector<double> th;
  for (int a = 0; a < theta.dim; ++a) th.push_back(theta[a]);
  j["theta"] = th;
  j["eps"] = eps;
  j["dt"] = dt;
  j["T"] = T;
  j["seed"] = seed;
  j["paths"] = paths;
  j["snapshots"] = snapshots;
  j["phase_mode"] = to_string(phase_mode);
  j["grad_tol"] = grad_tol;
  j["gap_tol"] = gap_tol;
  j["fd_step"] = fd_step;
  j["energy_factor"] = energy_factor;
  j["error_floor"] = error_floor;
  j["bands_points"] = bands_points;
  j["bands_count"] = bands_count;
  j["pairing_a"] = pairing_a;
  j["pairing_b"] = pairing_b;
  j["cutoff_sweep"] = cutoff_sweep;
  j["dt_sweep"] = dt_sweep;
  j["output"] = output;
  j["threads"] = threads;
  return j;
}

RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  cfg.text = std::string(text);

  std::map<std::string, std::pair<std::string, int>> entries;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw InputError("config line " + std::to_string(line) + ": expected key = value");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (key.empty()) throw InputError("config line " + std::to_string(line) + ": missing key");
    if (value.empty()) throw InputError("config line " + std::to_string(line) + ": key '" + key + "' has no value");
    if (entries.count(key))
      throw InputError("duplicate config key '" + key + "' (lines " + std::to_string(entries[key].second) + " and " +
                       std::to_string(line) + ")");
    entries[key] = {value, line};
  }

  using Setter = std::function<void(const std::string&, int, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"dim", [&](auto& k, int l, auto& v) { cfg.dim = static_cast<int>(integer(k, l, v)); }},
      {"sigma", [&](auto& k, int l, auto& v) { check_expression(k, l, v); cfg.sigma11 = cfg.sigma22 = v; }},
      {"sigma11", [&](auto& k, int l, auto& v) { check_expression(k, l, v); cfg.sigma11 = v; }},
      {"sigma12", [&](auto& k, int l, auto& v) { check_expression(k, l, v); cfg.sigma12 = v; }},
      {"sigma22", [&](auto& k, int l, auto& v) { check_expression(k, l, v); cfg.sigma22 = v; }},
      {"c", [&](auto& k, int l, auto& v) { check_expression(k, l, v); cfg.c = v; }},
      {"d", [&](auto& k, int l, auto& v) { check_expression(k, l, v); cfg.d = v; }},
      {"g", [&](auto& k, int l, auto& v) { check_expression(k, l, v); cfg.g = v; }},
      {"v0", [&](auto& k, int l, auto& v) { check_expression(k, l, v); cfg.v0 = v; }},
      {"cutoff", [&](auto& k, int l, auto& v) { cfg.cutoff = static_cast<int>(integer(k, l, v)); }},
      {"resolution", [&](auto& k, int l, auto& v) { cfg.resolution = static_cast<int>(integer(k, l, v)); }},
      {"grid", [&](auto& k, int l, auto& v) { cfg.grid = static_cast<int>(integer(k, l, v)); }},
      {"band", [&](auto& k, int l, auto& v) { cfg.band = static_cast<int>(integer(k, l, v)); }},
      {"theta",
       [&](auto& k, int l, auto& v) {
         const auto items = split_list(v);
         if (items.size() == 1) cfg.theta = Point(number(k, l, items[0]));
         else if (items.size() == 2) cfg.theta = Point(number(k, l, items[0]), number(k, l, items[1]));
         else fail(k, l, "expected one or two components");
       }},
      {"eps",
       [&](auto& k, int l, auto& v) {
         cfg.eps.clear();
         for (const auto& s : split_list(v)) cfg.eps.push_back(number(k, l, s));
       }},
      {"dt", [&](auto& k, int l, auto& v) { cfg.dt = number(k, l, v); }},
      {"T", [&](auto& k, int l, auto& v) { cfg.T = number(k, l, v); }},
      {"seed", [&](auto& k, int l, auto& v) { cfg.seed = unsigned64(k, l, v); }},
      {"paths", [&](auto& k, int l, auto& v) { cfg.paths = static_cast<int>(integer(k, l, v)); }},
      {"snapshots",
       [&](auto& k, int l, auto& v) {
         for (const auto& s : split_list(v)) cfg.snapshots.push_back(number(k, l, s));
       }},
      {"phase_mode",
       [&](auto& k, int l, auto& v) {
         try {
           cfg.phase_mode = parse_phase_mode(v);
         } catch (const InputError& e) {
           fail(k, l, e.what());
         }
       }},
      {"grad_tol", [&](auto& k, int l, auto& v) { cfg.grad_tol = number(k, l, v); }},
      {"gap_tol", [&](auto& k, int l, auto& v) { cfg.gap_tol = number(k, l, v); }},
      {"fd_step", [&](auto& k, int l, auto& v) { cfg.fd_step = number(k, l, v); }},
      {"energy_factor", [&](auto& k, int l, auto& v) { cfg.energy_factor = number(k, l, v); }},
      {"error_floor", [&](auto& k, int l, auto& v) { cfg.error_floor = number(k, l, v); }},
      {"bands_points", [&](auto& k, int l, auto& v) { cfg.bands_points = static_cast<int>(integer(k, l, v)); }},
      {"bands_count", [&](auto& k, int l, auto& v) { cfg.bands_count = static_cast<int>(integer(k, l, v)); }},
      {"pairing_a", [&](auto& k, int l, auto& v) { check_expression(k, l, v); cfg.pairing_a = v; }},
      {"pairing_b", [&](auto& k, int l, auto& v) { check_expression(k, l, v); cfg.pairing_b = v; }},
      {"cutoff_sweep",
       [&](auto& k, int l, auto& v) {
         for (const auto& s : split_list(v)) cfg.cutoff_sweep.push_back(static_cast<int>(integer(k, l, s)));
       }},
      {"dt_sweep",
       [&](auto& k, int l, auto& v) {
         for (const auto& s : split_list(v)) cfg.dt_sweep.push_back(number(k, l, s));
       }},
      {"output", [&](auto&, int, auto& v) { cfg.output = v; }},
      {"threads", [&](auto& k, int l, auto& v) { cfg.threads = static_cast<int>(integer(k, l, v)); }},
  };

  for (const auto& [key, entry] : entries) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw InputError("unknown config key '" + key + "' (line " + std::to_string(entry.second) + ")");
  }
  // `dim` first so that dimension-dependent defaults are known.
  const std::vector<std::string> order = {"dim"};
  for (const auto& key : order)
    if (entries.count(key)) setters.at(key)(key, entries[key].second, entries[key].first);
  for (const auto& [key, entry] : entries)
    if (std::find(order.begin(), order.end(), key) == order.end()) setters.at(key)(key, entry.second, entry.first);

  if (!entries.count("theta")) cfg.theta = Point::zero(cfg.dim);
  if (cfg.v0.empty()) cfg.v0 = cfg.dim == 1 ? "sin(pi*x)" : "sin(pi*x1)*sin(pi*x2)";
  validate(cfg);
  return cfg;
}

void validate(RunConfig& cfg) {
  auto bad = [](const std::string& key, const std::string& why) {
    throw InputError("config key '" + key + "': " + why);
  };
  if (cfg.dim != 1 && cfg.dim != 2) bad("dim", "must be 1 or 2");
  const std::pair<const char*, const std::string*> exprs[] = {
      {"sigma11", &cfg.sigma11}, {"sigma12", &cfg.sigma12}, {"sigma22", &cfg.sigma22},
      {"c", &cfg.c},             {"d", &cfg.d},             {"g", &cfg.g},
      {"v0", &cfg.v0},           {"pairing_a", &cfg.pairing_a}, {"pairing_b", &cfg.pairing_b}};
  for (const auto& [key, text] : exprs) {
    const Expression e = Expression::parse(*text);
    const std::string k = key;
    if (e.max_axis() > cfg.dim) bad(k, "uses an axis beyond dimension " + std::to_string(cfg.dim));
    const bool x_only = k == "v0" || k == "pairing_a";
    if (k != "d" && !x_only && e.depends_on_x()) bad(k, "must depend on y only");
    if (x_only && e.depends_on_y()) bad(k, "must depend on x only");
  }
  if (cfg.cutoff < 1) bad("cutoff", "must be positive");
  if (cfg.resolution != 0) {
    if (!fft::is_power_of_two(static_cast<std::size_t>(std::max(cfg.resolution, 0))) || cfg.resolution < 8)
      bad("resolution", "must be a power of two >= 8");
    if (cfg.resolution < 4 * cfg.cutoff) bad("resolution", "must be at least 4 * cutoff");
  }
  for (int k : cfg.cutoff_sweep)
    if (k < 1) bad("cutoff_sweep", "entries must be positive");
  if (cfg.grid < 2) bad("grid", "must be at least 2");
  try {
    (void)MacroField::from_expression(MacroGrid{cfg.dim, cfg.grid}, Expression::parse(cfg.v0));
  } catch (const InputError& e) {
    bad("v0", e.what());
  }
  if (cfg.band < 1) bad("band", "must be at least 1");
  if (cfg.theta.dim != cfg.dim) bad("theta", "needs " + std::to_string(cfg.dim) + " components");
  if (cfg.eps.empty()) bad("eps", "must not be empty");
  for (std::size_t i = 0; i < cfg.eps.size(); ++i) {
    if (i > 0 && !(cfg.eps[i] < cfg.eps[i - 1])) bad("eps", "must be sorted strictly descending");
    try {
      validate_scale(MacroGrid{cfg.dim, cfg.grid}, cfg.eps[i]);
    } catch (const InputError& e) {
      bad("eps", e.what());
    }
  }
  if (!(cfg.dt > 0.0)) bad("dt", "must be positive");
  if (!(cfg.T > 0.0)) bad("T", "must be positive");
  try {
    (void)step_count(cfg.T, cfg.dt);
  } catch (const InputError& e) {
    bad("T", e.what());
  }
  if (cfg.paths < 1) bad("paths", "must be at least 1");
  if (cfg.snapshots.empty()) cfg.snapshots = {cfg.T};
  try {
    (void)snapshot_steps(cfg.snapshots, cfg.dt, step_count(cfg.T, cfg.dt));
  } catch (const InputError& e) {
    bad("snapshots", e.what());
  }
  if (!std::is_sorted(cfg.snapshots.begin(), cfg.snapshots.end())) bad("snapshots", "must be ascending");
  for (double dt : cfg.dt_sweep) {
    if (!(dt >= cfg.dt)) bad("dt_sweep", "entries must be >= dt");
    const double r = dt / cfg.dt;
    if (std::abs(r - std::round(r)) > 1e-9 * r) bad("dt_sweep", "entries must be multiples of dt");
    try {
      (void)step_count(cfg.T, dt);
    } catch (const InputError& e) {
      bad("dt_sweep", e.what());
    }
  }
  if (!(cfg.grad_tol > 0.0)) bad("grad_tol", "must be positive");
  if (!(cfg.gap_tol > 0.0)) bad("gap_tol", "must be positive");
  if (!(cfg.fd_step > 0.0)) bad("fd_step", "must be positive");
  if (!(cfg.energy_factor > 1.0)) bad("energy_factor", "must exceed 1");
  if (!(cfg.error_floor >= 0.0)) bad("error_floor", "must be non-negative");
  if (cfg.bands_points < 1) bad("bands_points", "must be positive");
  if (cfg.bands_count < 1) bad("bands_count", "must be positive");
  if (cfg.threads < 0) bad("threads", "must be non-negative");
}

}  // namespace blochhom
