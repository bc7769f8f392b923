#include "blochhom/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>

#include <json.hpp>

#include "blochhom/error.hpp"
#include "blochhom/io.hpp"
#include "blochhom/pipeline.hpp"
#include "blochhom/verify.hpp"

namespace blochhom {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

json tensor_json(const Tensor2& t) {
  json rows = json::array();
  for (int i = 0; i < t.dim; ++i) {
    std::vector<double> r;
    for (int j = 0; j < t.dim; ++j) r.push_back(t(i, j));
    rows.push_back(r);
  }
  return rows;
}

json point_json(const Point& p) {
  std::vector<double> v;
  for (int a = 0; a < p.dim; ++a) v.push_back(p[a]);
  return v;
}

json error_json(const std::exception& e, const std::string& stage) {
  json j;
  j["stage"] = stage;
  j["message"] = e.what();
  std::string kind = "error";
  if (const auto* s = dynamic_cast<const SimplicityError*>(&e)) {
    kind = "simplicity";
    j["gap_below"] = s->gap_below();
    j["gap_above"] = s->gap_above();
  } else if (const auto* f = dynamic_cast<const FredholmError*>(&e)) {
    kind = "fredholm";
    j["projection"] = f->projection();
  } else if (const auto* p = dynamic_cast<const FactorizationError*>(&e)) {
    kind = "factorization";
    j["min_pivot"] = p->min_pivot();
  } else if (dynamic_cast<const BandCrossingError*>(&e)) kind = "band-crossing";
  else if (dynamic_cast<const ConvergenceError*>(&e)) kind = "convergence";
  else if (dynamic_cast<const ConditioningError*>(&e)) kind = "conditioning";
  else if (dynamic_cast<const InconsistencyError*>(&e)) kind = "inconsistency";
  else if (dynamic_cast<const DefinitenessError*>(&e)) kind = "definiteness";
  else if (dynamic_cast<const CoercivityError*>(&e)) kind = "coercivity";
  else if (dynamic_cast<const TruncationError*>(&e)) kind = "truncation";
  else if (dynamic_cast<const InputError*>(&e)) kind = "input";
  j["kind"] = kind;
  return j;
}

class Writer {
 public:
  explicit Writer(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  std::ofstream open(const std::string& name) const {
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) throw InputError("cannot write " + (dir_ / name).string());
    return out;
  }
  void write_json(const std::string& name, const json& j) const {
    auto out = open(name);
    out << j.dump(2) << '\n';
  }

 private:
  fs::path dir_;
};

std::string num(double v) { return io::format_double(v); }

json critical_json(const CriticalPoint& c) {
  json j;
  j["band"] = c.band;
  j["theta"] = point_json(c.theta);
  j["eigenvalue"] = c.eigenvalue;
  j["gradient_norm"] = c.gradient_norm;
  j["gap_below"] = c.gap_below;
  j["gap_above"] = c.gap_above;
  j["hessian"] = tensor_json(c.hessian);
  j["kind"] = to_string(c.kind);
  j["iterations"] = c.iterations;
  return j;
}

// Samples of a coefficient vector on the M^N torus grid.
void write_samples(std::ostream& out, const PlaneWaveBasis& basis, const PeriodicField& grid, const std::string& name,
                   int k, int l, const CVector& v) {
  BlochEigenpair field;
  field.coeffs = v;
  for (std::size_t i = 0; i < grid.node_count(); ++i) {
    const Point y = grid.node(i);
    const cplx z = field.evaluate(basis, y);
    out << name << ',' << k << ',' << l << ',' << i << ',' << num(y[0]);
    if (basis.dim() == 2) out << ',' << num(y[1]);
    out << ',' << num(z.real()) << ',' << num(z.imag()) << '\n';
  }
}

void run_bands(const RunConfig& cfg, const Writer& w, json& result) {
  const CellProblem problem = make_cell_problem(cfg);
  std::vector<Point> thetas;
  const int n = cfg.bands_points;
  for (int i = 0; i < n; ++i) {
    const double a = static_cast<double>(i) / n;
    if (cfg.dim == 1) {
      thetas.emplace_back(a);
    } else {
      for (int j = 0; j < n; ++j) thetas.emplace_back(a, static_cast<double>(j) / n);
    }
  }
  const auto rows = sample_bands(problem, thetas, cfg.bands_count);
  auto out = w.open("bands.csv");
  out << (cfg.dim == 1 ? "theta" : "theta1,theta2") << ",band,eigenvalue\n";
  for (const auto& r : rows) {
    out << num(r.theta[0]);
    if (cfg.dim == 2) out << ',' << num(r.theta[1]);
    out << ',' << r.band << ',' << num(r.eigenvalue) << '\n';
  }
  result["points"] = thetas.size();
  result["bands"] = cfg.bands_count;
  result["files"] = {"bands.csv"};
}

void run_cell_stage(const RunConfig& cfg, Stage stage, const Writer& w, json& result) {
  const CellProblem problem = make_cell_problem(cfg);
  const MacroGrid grid = make_grid(cfg);
  const Certified cert = certify(cfg, problem, grid, stage);
  result["critical_point"] = critical_json(cert.critical);
  if (stage == Stage::critical) return;

  const CorrectorSet& cs = *cert.correctors;
  json corr;
  corr["hessian"] = tensor_json(cs.hessian);
  corr["chi_symmetry_defect"] = cs.chi_symmetry_defect;
  json diags = json::array();
  for (const auto& d : cs.diagnostics)
    diags.push_back({{"corrector", d.l < 0 ? "zeta" : "chi"},
                     {"k", d.k},
                     {"l", d.l},
                     {"compatibility", d.compatibility},
                     {"residual", d.residual},
                     {"orthogonality", d.orthogonality}});
  corr["diagnostics"] = diags;
  const auto tests = weak_test_vectors(problem.basis(), 4, cfg.seed);
  json weak = json::array();
  for (double eps : cfg.eps) {
    const auto r = weak_identity_residuals(problem, cert.pair, cs.zeta, eps, tests);
    weak.push_back({{"eps", eps}, {"cell", r.cell_residual}, {"zeta", r.zeta_residual}, {"tests", r.test_count}});
  }
  corr["weak_identities"] = weak;
  result["correctors"] = corr;
  if (stage == Stage::correctors) {
    auto out = w.open("correctors.csv");
    out << "corrector,k,l,node," << (cfg.dim == 1 ? "y" : "y1,y2") << ",re,im\n";
    const PlaneWaveBasis& basis = problem.basis();
    const PeriodicField& torus = problem.potential();
    write_samples(out, basis, torus, "psi", -1, -1, cert.pair.coeffs);
    for (int k = 0; k < cfg.dim; ++k) write_samples(out, basis, torus, "zeta", k, -1, cs.zeta[static_cast<std::size_t>(k)]);
    for (int k = 0; k < cfg.dim; ++k)
      for (int l = 0; l < cfg.dim; ++l) write_samples(out, basis, torus, "chi", k, l, cs.chi_at(k, l));
    result["files"] = {"correctors.csv"};
    return;
  }

  const EffectiveModel& m = *cert.model;
  json eff;
  eff["band"] = m.band;
  eff["theta"] = point_json(m.theta);
  eff["eigenvalue"] = m.eigenvalue;
  eff["sigma_star"] = tensor_json(m.sigma_star);
  eff["sigma_star_hessian"] = tensor_json(m.sigma_star_fd);
  eff["route"] = "corrector formula, cross-checked by band Hessian";
  eff["route_error"] = m.route_error;
  eff["routes_agree"] = m.routes_agree;
  eff["kind"] = to_string(m.kind);
  eff["positive_definite"] = m.positive_definite;
  eff["g_star"] = m.g_star;
  json psi = json::array();
  for (const auto& c : m.coeffs) psi.push_back({c.real(), c.imag()});
  eff["psi"] = psi;
  result["effective"] = eff;

  auto out = w.open("d_star.csv");
  out << (cfg.dim == 1 ? "node,x" : "node,x1,x2") << ",value\n";
  for (std::size_t i = 0; i < grid.node_count(); ++i) {
    const Point x = grid.coordinate(i);
    out << i << ',' << num(x[0]);
    if (cfg.dim == 2) out << ',' << num(x[1]);
    out << ',' << num(m.d_star.values[i]) << '\n';
  }
  result["files"] = {"d_star.csv"};
}

void write_trajectory(const Writer& w, const std::string& name, const FieldPath& p) {
  auto out = w.open(name);
  out << "t,node,re,im\n";
  for (std::size_t s = 0; s < p.times.size(); ++s)
    for (std::size_t i = 0; i < p.snapshots[s].size(); ++i)
      out << num(p.times[s]) << ',' << i << ',' << num(p.snapshots[s][i].real()) << ','
          << num(p.snapshots[s][i].imag()) << '\n';
}

json norms_json(const FieldPath& p) {
  json j;
  std::vector<double> snap;
  for (double t : p.times) snap.push_back(p.l2[static_cast<std::size_t>(std::llround(t / p.dt))]);
  j["l2_at_snapshots"] = snap;
  j["l2_final"] = p.l2.back();
  j["h1_final"] = p.h1.back();
  return j;
}

void run_simulate(const RunConfig& cfg, const Writer& w, json& result) {
  const CellProblem problem = make_cell_problem(cfg);
  const MacroGrid grid = make_grid(cfg);
  const Certified cert = certify(cfg, problem, grid, Stage::effective);
  const EffectiveModel& model = *cert.model;
  const Coefficients coeffs = make_coefficients(cfg, problem, grid);
  const MacroField v0 = make_v0(cfg, grid);
  const std::size_t steps = step_count(cfg.T, cfg.dt);
  const double shift = cfg.phase_mode == PhaseMode::gauge_shift ? model.eigenvalue : 0.0;
  const ImexStepper effective(effective_operator_data(model), cfg.dt);
  const auto seeds = cfg.seeds();

  json runs = json::array();
  std::vector<std::string> files;
  for (std::size_t e = 0; e < cfg.eps.size(); ++e) {
    const double eps = cfg.eps[e];
    const ImexStepper fine(build_fine_problem(coeffs, grid, eps, shift).data, cfg.dt);
    const MacroField u0 = prepare_initial_data(problem.basis(), cert.pair, v0, eps);
    const auto paths = run_ensemble(fine, effective, u0, v0, seeds, steps, cfg.snapshots);
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      const std::string tag = "eps" + std::to_string(e) + "_seed" + std::to_string(seeds[s]);
      write_trajectory(w, "fine_" + tag + ".csv", paths[s].fine);
      files.push_back("fine_" + tag + ".csv");
      if (e == 0) {
        write_trajectory(w, "effective_seed" + std::to_string(seeds[s]) + ".csv", paths[s].effective);
        files.push_back("effective_seed" + std::to_string(seeds[s]) + ".csv");
      }
      runs.push_back({{"eps", eps},
                      {"seed", seeds[s]},
                      {"fine", norms_json(paths[s].fine)},
                      {"effective", norms_json(paths[s].effective)}});
    }
  }
  result["potential_shift"] = shift;
  result["runs"] = runs;
  result["files"] = files;
}

int run_verify(const RunConfig& cfg, const Writer& w, json& result) {
  const VerificationReport rep = convergence_sweep(cfg);
  w.write_json("report.json", to_json(rep));
  {
    auto out = w.open("factorization.csv");
    out << "eps,seed,t,error,relative\n";
    for (const auto& f : rep.factorization)
      out << num(f.eps) << ',' << f.seed << ',' << num(f.t) << ',' << num(f.error) << ',' << (f.relative ? 1 : 0)
          << '\n';
  }
  {
    auto out = w.open("energy.csv");
    out << "eps,mean,std_error,initial_norm_sq\n";
    for (const auto& e : rep.energy)
      out << num(e.eps) << ',' << num(e.mean) << ',' << num(e.std_error) << ',' << num(e.initial_norm_sq) << '\n';
  }
  {
    auto out = w.open("pairing.csv");
    out << "eps,re,im,limit_re,limit_im,error\n";
    for (const auto& p : rep.pairing)
      out << num(p.eps) << ',' << num(p.value.real()) << ',' << num(p.value.imag()) << ',' << num(p.limit.real())
          << ',' << num(p.limit.imag()) << ',' << num(p.error) << '\n';
  }
  result["passed"] = rep.passed();
  result["files"] = {"report.json", "factorization.csv", "energy.csv", "pairing.csv"};
  if (!rep.complete) {
    result["error"] = {{"stage", "verify"}, {"kind", rep.failure_kind}, {"message", rep.failure}};
    return rep.failure_kind == "input" ? kExitInput : kExitFailure;
  }
  return rep.passed() ? kExitOk : kExitFailure;
}

int thread_setting(const CliRequest& req, const RunConfig& cfg) {
  if (req.threads) return *req.threads;
  if (cfg.threads > 0) return cfg.threads;
  if (const char* env = std::getenv("BLOCH_HOMOG_THREADS")) {
    try {
      return std::stoi(env);
    } catch (const std::exception&) {
      throw InputError("BLOCH_HOMOG_THREADS must be an integer");
    }
  }
  return 0;
}

}  // namespace

int dispatch(const CliRequest& req, std::ostream& log) {
  json manifest;
  manifest["tool"] = "blochhom";
  manifest["version"] = kVersion;
  manifest["command"] = req.command;
  manifest["config_text"] = req.config_text;

  const std::string dir = req.out_dir;
  auto finish = [&](const std::string& out_dir, int code) {
    manifest["exit_code"] = code;
    manifest["status"] = code == kExitOk ? "ok" : "failed";
    try {
      Writer(out_dir).write_json("manifest.json", manifest);
    } catch (const std::exception& e) {
      log << "error: " << e.what() << '\n';
      return code == kExitOk ? kExitInput : code;
    }
    return code;
  };

  RunConfig cfg;
  try {
    cfg = parse_config(req.config_text);
    if (req.seed) cfg.seed = *req.seed;
    if (!dir.empty()) cfg.output = dir;
    validate(cfg);
    const int threads = thread_setting(req, cfg);
    if (threads < 0) throw InputError("thread count must be non-negative");
    if (threads > 0) set_thread_count(threads);
  } catch (const InputError& e) {
    log << "error: " << e.what() << '\n';
    manifest["error"] = error_json(e, "config");
    return finish(dir.empty() ? "out" : dir, kExitInput);
  }
  manifest["config"] = cfg.resolved();

  json result;
  int code = kExitOk;
  try {
    const Writer w(cfg.output);
    if (req.command == "bands") run_bands(cfg, w, result);
    else if (req.command == "critical") run_cell_stage(cfg, Stage::critical, w, result);
    else if (req.command == "correctors") run_cell_stage(cfg, Stage::correctors, w, result);
    else if (req.command == "effective") run_cell_stage(cfg, Stage::effective, w, result);
    else if (req.command == "simulate") run_simulate(cfg, w, result);
    else if (req.command == "verify") code = run_verify(cfg, w, result);
    else throw InputError("unknown command '" + req.command + "'");
  } catch (const InputError& e) {
    log << "error [" << req.command << "]: " << e.what() << '\n';
    result["error"] = error_json(e, req.command);
    code = kExitInput;
  } catch (const Error& e) {
    log << "error [" << req.command << "]: " << e.what() << '\n';
    result["error"] = error_json(e, req.command);
    code = kExitFailure;
  } catch (const std::filesystem::filesystem_error& e) {
    log << "error [" << req.command << "]: " << e.what() << '\n';
    result["error"] = error_json(e, req.command);
    code = kExitInput;
  }
  manifest["result"] = result;
  return finish(cfg.output, code);
}

}  // namespace blochhom
