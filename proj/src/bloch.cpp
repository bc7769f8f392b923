#include "blochhom/bloch.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "blochhom/error.hpp"
#include "blochhom/io.hpp"

namespace blochhom {

PlaneWaveBasis::PlaneWaveBasis(int dim, int cutoff) : dim_(dim), cutoff_(cutoff) {
  if (dim != 1 && dim != 2) throw InputError("basis dimension must be 1 or 2");
  if (cutoff < 1) throw InputError("plane-wave cutoff must be >= 1");
  const auto w = static_cast<std::size_t>(2 * cutoff + 1);
  size_ = dim == 1 ? w : w * w;
}

WaveVector PlaneWaveBasis::wave(std::size_t i) const {
  const auto w = static_cast<std::size_t>(2 * cutoff_ + 1);
  if (dim_ == 1) return {static_cast<int>(i) - cutoff_, 0};
  return {static_cast<int>(i / w) - cutoff_, static_cast<int>(i % w) - cutoff_};
}

bool PlaneWaveBasis::contains(const WaveVector& k) const {
  if (std::abs(k[0]) > cutoff_) return false;
  return dim_ == 1 ? k[1] == 0 : std::abs(k[1]) <= cutoff_;
}

std::size_t PlaneWaveBasis::index(const WaveVector& k) const {
  const auto w = static_cast<std::size_t>(2 * cutoff_ + 1);
  const auto i1 = static_cast<std::size_t>(k[0] + cutoff_);
  return dim_ == 1 ? i1 : i1 * w + static_cast<std::size_t>(k[1] + cutoff_);
}

CellProblem::CellProblem(MatrixField sigma, PeriodicField potential, int cutoff)
    : sigma_(std::move(sigma)), potential_(std::move(potential)), basis_(sigma_.dim(), cutoff) {
  if (potential_.dim() != sigma_.dim()) throw InputError("sigma and c have different dimensions");
  const int needed = 2 * cutoff;
  const int resolved = std::min(sigma_.resolution(), potential_.resolution()) / 2;
  if (needed > resolved)
    throw TruncationError("plane-wave cutoff " + std::to_string(cutoff) +
                          " needs coefficients up to |k| = " + std::to_string(needed) +
                          " but the fields resolve only " + std::to_string(resolved) +
                          "; raise the field resolution to at least " + std::to_string(4 * cutoff));
  nu_ = validate_coercivity(sigma_);

  const int w = 4 * cutoff + 1;
  const std::size_t entries = dim() == 1 ? static_cast<std::size_t>(w) : static_cast<std::size_t>(w * w);
  auto fill = [&](const PeriodicField& f) {
    std::vector<cplx> t(entries);
    for (std::size_t i = 0; i < entries; ++i) {
      WaveVector d{0, 0};
      if (dim() == 1) d[0] = static_cast<int>(i) - needed;
      else d = {static_cast<int>(i) / w - needed, static_cast<int>(i) % w - needed};
      t[i] = f.coefficient(d);
    }
    return t;
  };
  for (int a = 0; a < dim(); ++a)
    for (int b = 0; b < dim(); ++b) sigma_hat_.push_back(fill(sigma_(a, b)));
  potential_hat_ = fill(potential_);
}

std::size_t CellProblem::diff_index(const WaveVector& d) const {
  const int needed = 2 * cutoff();
  const auto i1 = static_cast<std::size_t>(d[0] + needed);
  if (dim() == 1) return i1;
  return i1 * static_cast<std::size_t>(4 * cutoff() + 1) + static_cast<std::size_t>(d[1] + needed);
}

CVector CellProblem::multiply_sigma(int a, int b, const CVector& x) const {
  const std::size_t n = basis_.size();
  CVector y(n, cplx{});
  const auto& t = sigma_hat_[table(a, b)];
  for (std::size_t i = 0; i < n; ++i) {
    const WaveVector ki = basis_.wave(i);
    cplx s{};
    for (std::size_t j = 0; j < n; ++j) {
      const WaveVector kj = basis_.wave(j);
      s += t[diff_index({ki[0] - kj[0], ki[1] - kj[1]})] * x[j];
    }
    y[i] = s;
  }
  return y;
}

CVector CellProblem::multiply(const PeriodicField& f, const CVector& x) const {
  if (f.dim() != dim()) throw InputError("field dimension does not match the cell problem");
  const std::size_t n = basis_.size();
  CVector y(n, cplx{});
  for (std::size_t i = 0; i < n; ++i) {
    const WaveVector ki = basis_.wave(i);
    cplx s{};
    for (std::size_t j = 0; j < n; ++j) {
      const WaveVector kj = basis_.wave(j);
      s += f.coefficient({ki[0] - kj[0], ki[1] - kj[1]}) * x[j];
    }
    y[i] = s;
  }
  return y;
}

CellProblem CellProblem::with_potential_shift(double delta) const {
  return CellProblem(sigma_, potential_.plus_constant(delta), cutoff());
}

CellProblem CellProblem::with_cutoff(int cutoff) const { return CellProblem(sigma_, potential_, cutoff); }

BlochOperator assemble_cell_operator(const CellProblem& problem, const Point& theta, Exec exec) {
  if (theta.dim != problem.dim()) throw InputError("theta dimension does not match the cell problem");
  for (int a = 0; a < theta.dim; ++a)
    if (!std::isfinite(theta[a])) throw InputError("non-finite Bloch frequency");
  const PlaneWaveBasis& basis = problem.basis();
  const std::size_t n = basis.size();
  const int dim = problem.dim();
  BlochOperator op{theta, CMatrix(n)};

  auto row = [&](std::size_t i) {
    const WaveVector ki = basis.wave(i);
    for (std::size_t j = 0; j < n; ++j) {
      const WaveVector kj = basis.wave(j);
      const WaveVector d{ki[0] - kj[0], ki[1] - kj[1]};
      cplx s{};
      for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b)
          s += (ki[static_cast<std::size_t>(a)] + theta[a]) * problem.sigma_hat(a, b, d) *
               (kj[static_cast<std::size_t>(b)] + theta[b]);
      op.matrix(i, j) = kFourPiSq * s + problem.potential_hat(d);
    }
  };

  parallel_for(n, exec, row);
  return op;
}

cplx BlochEigenpair::evaluate(const PlaneWaveBasis& basis, const Point& y) const {
  cplx s{};
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    const WaveVector k = basis.wave(i);
    double phase = k[0] * y[0];
    if (basis.dim() == 2) phase += k[1] * y[1];
    s += coeffs[i] * std::polar(1.0, kTwoPi * phase);
  }
  return s;
}

void fix_phase(CVector& v) {
  std::size_t best = 0;
  double best_mod = -1.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    // Ties within roundoff go to the lowest index.
    const double m = std::abs(v[i]);
    if (m > best_mod * (1.0 + 1e-12)) {
      best_mod = m;
      best = i;
    }
  }
  if (best_mod <= 0.0) return;
  const cplx rot = std::conj(v[best]) / best_mod;
  for (auto& x : v) x *= rot;
  v[best] = best_mod;
}

std::vector<BlochEigenpair> solve_spectrum(const BlochOperator& op, int n_max, const JacobiOptions& jacobi) {
  const std::size_t n = op.matrix.size();
  if (n_max < 1 || static_cast<std::size_t>(n_max) > n)
    throw InputError("requested band count " + std::to_string(n_max) + " outside 1.." + std::to_string(n));
  const HermitianEigen eig = jacobi_eigen(op.matrix, jacobi);
  const double scale = op.matrix.frobenius_norm();

  std::vector<BlochEigenpair> out;
  out.reserve(static_cast<std::size_t>(n_max));
  for (int b = 0; b < n_max; ++b) {
    BlochEigenpair p;
    p.theta = op.theta;
    p.band = b + 1;
    p.coeffs = eig.vectors.column(static_cast<std::size_t>(b));
    const double nrm = norm2(p.coeffs);
    for (auto& c : p.coeffs) c /= nrm;
    fix_phase(p.coeffs);
    const CVector av = op.matrix * p.coeffs;
    p.eigenvalue = dot(p.coeffs, av).real();
    double res = 0.0;
    for (std::size_t i = 0; i < n; ++i) res += std::norm(av[i] - p.eigenvalue * p.coeffs[i]);
    res = std::sqrt(res);
    if (res > 1e-10 * std::max(scale, 1.0))
      throw ConvergenceError("eigenpair residual " + io::brief(res) + " exceeds tolerance for band " +
                             std::to_string(b + 1));
    out.push_back(std::move(p));
  }
  return out;
}

BandSample band_at(const CellProblem& problem, int band, const Point& theta, const JacobiOptions& jacobi) {
  const BlochOperator op = assemble_cell_operator(problem, theta, jacobi.exec);
  const int count = std::min<int>(band + 1, static_cast<int>(op.matrix.size()));
  auto pairs = solve_spectrum(op, count, jacobi);
  BandSample s;
  s.pair = pairs[static_cast<std::size_t>(band - 1)];
  if (band > 1) s.gap_below = s.pair.eigenvalue - pairs[static_cast<std::size_t>(band - 2)].eigenvalue;
  if (band < count) s.gap_above = pairs[static_cast<std::size_t>(band)].eigenvalue - s.pair.eigenvalue;
  return s;
}

namespace {

struct PointLess {
  bool operator()(const Point& a, const Point& b) const { return a.c < b.c; }
};

// Band values over a finite-difference stencil around a centre, with the
// simplicity and band-identity checks.
class StencilEvaluator {
 public:
  StencilEvaluator(const CellProblem& problem, int band, const Point& centre, const BandOptions& opt)
      : problem_(problem), band_(band), opt_(opt) {
    centre_ = band_at(problem_, band_, centre, opt_.jacobi);
    if (centre_.gap_below < opt_.gap_tol || centre_.gap_above < opt_.gap_tol)
      throw SimplicityError("band " + std::to_string(band) + " is not simple at theta (gaps " +
                                io::brief(centre_.gap_below) + ", " +
                                io::brief(centre_.gap_above) + ")",
                            centre_.gap_below, centre_.gap_above);
    cache_.emplace(centre, centre_.pair.eigenvalue);
  }

  const BandSample& centre() const { return centre_; }

  double value(const Point& theta) {
    if (auto it = cache_.find(theta); it != cache_.end()) return it->second;
    const BandSample s = band_at(problem_, band_, theta, opt_.jacobi);
    const double overlap = std::abs(dot(centre_.pair.coeffs, s.pair.coeffs));
    if (s.gap_below < opt_.gap_tol || s.gap_above < opt_.gap_tol || overlap < opt_.overlap_min)
      throw BandCrossingError("band " + std::to_string(band_) +
                              " crosses another band inside the finite-difference stencil (gaps " +
                              io::brief(s.gap_below) + ", " + io::brief(s.gap_above) +
                              ", overlap " + io::brief(overlap) + ")");
    cache_.emplace(theta, s.pair.eigenvalue);
    return s.pair.eigenvalue;
  }

  Point gradient(const Point& theta, double h) {
    Point g = Point::zero(theta.dim);
    for (int a = 0; a < theta.dim; ++a)
      g[a] = (value(theta.shifted(a, h)) - value(theta.shifted(a, -h))) / (2.0 * h);
    return g;
  }

  Tensor2 hessian(const Point& theta, double h) {
    Tensor2 H = Tensor2::zero(theta.dim);
    const double f0 = value(theta);
    for (int a = 0; a < theta.dim; ++a) {
      H(a, a) = (value(theta.shifted(a, h)) - 2.0 * f0 + value(theta.shifted(a, -h))) / (h * h);
      for (int b = a + 1; b < theta.dim; ++b) {
        const double fpp = value(theta.shifted(a, h).shifted(b, h));
        const double fpm = value(theta.shifted(a, h).shifted(b, -h));
        const double fmp = value(theta.shifted(a, -h).shifted(b, h));
        const double fmm = value(theta.shifted(a, -h).shifted(b, -h));
        H(a, b) = H(b, a) = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
      }
    }
    return H;
  }

 private:
  const CellProblem& problem_;
  int band_;
  BandOptions opt_;
  BandSample centre_;
  std::map<Point, double, PointLess> cache_;
};

Point refined_gradient(StencilEvaluator& ev, const Point& theta, const BandOptions& opt) {
  const Point g1 = ev.gradient(theta, opt.step);
  if (!opt.richardson) return g1;
  const Point g2 = ev.gradient(theta, 0.5 * opt.step);
  Point g = Point::zero(theta.dim);
  for (int a = 0; a < theta.dim; ++a) g[a] = (4.0 * g2[a] - g1[a]) / 3.0;
  return g;
}

Tensor2 refined_hessian(StencilEvaluator& ev, const Point& theta, const BandOptions& opt) {
  const Tensor2 h1 = ev.hessian(theta, opt.step);
  if (!opt.richardson) return h1;
  const Tensor2 h2 = ev.hessian(theta, 0.5 * opt.step);
  Tensor2 h = Tensor2::zero(theta.dim);
  for (std::size_t i = 0; i < 4; ++i) h.a[i] = (4.0 * h2.a[i] - h1.a[i]) / 3.0;
  return h;
}

Point wrap_frequency(Point theta) {
  for (int a = 0; a < theta.dim; ++a) {
    double v = theta[a] - std::floor(theta[a]);
    if (v > 1.0 - 1e-12 || v < 1e-12) v = 0.0;
    theta[a] = v;
  }
  return theta;
}

}  // namespace

Point band_gradient(const CellProblem& problem, int band, const Point& theta, const BandOptions& options) {
  StencilEvaluator ev(problem, band, theta, options);
  return refined_gradient(ev, theta, options);
}

Tensor2 band_hessian(const CellProblem& problem, int band, const Point& theta, const BandOptions& options) {
  StencilEvaluator ev(problem, band, theta, options);
  return refined_hessian(ev, theta, options);
}

std::string to_string(CriticalKind kind) {
  switch (kind) {
    case CriticalKind::minimum: return "minimum";
    case CriticalKind::maximum: return "maximum";
    case CriticalKind::saddle: return "saddle";
    case CriticalKind::degenerate: return "degenerate";
  }
  return "degenerate";
}

CriticalKind classify_hessian(const Tensor2& hessian, double tol) {
  const auto ev = hessian.eigenvalues();
  const int n = hessian.dim;
  int pos = 0, neg = 0;
  for (int i = 0; i < n; ++i) {
    const double v = ev[static_cast<std::size_t>(n == 1 ? 0 : i)];
    if (std::abs(v) <= tol) return CriticalKind::degenerate;
    (v > 0 ? pos : neg)++;
  }
  if (pos == n) return CriticalKind::minimum;
  if (neg == n) return CriticalKind::maximum;
  return CriticalKind::saddle;
}

CriticalPoint find_critical_point(const CellProblem& problem, int band, const Point& seed,
                                  const CriticalOptions& options) {
  if (seed.dim != problem.dim()) throw InputError("seed dimension does not match the cell problem");
  BandOptions bopt = options.band;
  bopt.gap_tol = options.gap_tol;

  auto grad_norm = [](const Point& g) { return g.norm(); };

  Point theta = seed;
  int iter = 0;
  for (;; ++iter) {
    StencilEvaluator ev(problem, band, theta, bopt);
    const Point g = refined_gradient(ev, theta, bopt);
    const double gn = grad_norm(g);
    if (gn <= options.grad_tol) break;
    if (iter >= options.max_iter)
      throw ConvergenceError("critical point search did not converge in " + std::to_string(options.max_iter) +
                             " iterations (gradient norm " + io::brief(gn) + ")");

    const Tensor2 H = refined_hessian(ev, theta, bopt);
    Point step = Point::zero(theta.dim);
    if (theta.dim == 1) {
      if (H(0, 0) == 0.0) throw ConvergenceError("singular band Hessian during Newton iteration");
      step[0] = -g[0] / H(0, 0);
    } else {
      const double det = H(0, 0) * H(1, 1) - H(0, 1) * H(1, 0);
      if (det == 0.0) throw ConvergenceError("singular band Hessian during Newton iteration");
      step[0] = -(H(1, 1) * g[0] - H(0, 1) * g[1]) / det;
      step[1] = -(-H(1, 0) * g[0] + H(0, 0) * g[1]) / det;
    }

    // Damp on non-decrease of |grad|.
    double alpha = 1.0;
    Point trial = theta;
    for (int k = 0; k < 30; ++k) {
      trial = theta;
      for (int a = 0; a < theta.dim; ++a) trial[a] += alpha * step[a];
      try {
        StencilEvaluator tv(problem, band, trial, bopt);
        if (grad_norm(refined_gradient(tv, trial, bopt)) < gn) break;
      } catch (const BandCrossingError&) {
      } catch (const SimplicityError&) {
      }
      alpha *= options.damping;
    }
    theta = trial;
  }

  theta = wrap_frequency(theta);
  StencilEvaluator ev(problem, band, theta, bopt);
  CriticalPoint cp;
  cp.theta = theta;
  cp.band = band;
  cp.eigenvalue = ev.centre().pair.eigenvalue;
  cp.gap_below = ev.centre().gap_below;
  cp.gap_above = ev.centre().gap_above;
  cp.gradient_norm = grad_norm(refined_gradient(ev, theta, bopt));
  if (cp.gradient_norm > options.grad_tol)
    throw ConvergenceError("gradient norm " + io::brief(cp.gradient_norm) +
                           " above tolerance after reducing theta to the unit cell");
  cp.hessian = refined_hessian(ev, theta, bopt);
  double hscale = 1.0;
  for (double v : cp.hessian.a) hscale = std::max(hscale, std::abs(v));
  cp.kind = classify_hessian(cp.hessian, 1e-6 * hscale);
  cp.iterations = iter;
  return cp;
}

CMatrix assemble_fd_cell_operator(const MatrixField& sigma, const PeriodicField& potential, const Point& theta) {
  const int dim = sigma.dim();
  const int m = sigma.resolution();
  if (potential.resolution() != m || potential.dim() != dim)
    throw InputError("finite-difference cell operator needs matching field grids");
  if (dim == 2) {
    for (double v : sigma(0, 1).samples())
      if (v != 0.0) throw InputError("finite-difference cell operator supports diagonal sigma only");
  }
  const double h = 1.0 / m;
  const auto mu = static_cast<std::size_t>(m);
  const std::size_t n = dim == 1 ? mu : mu * mu;
  CMatrix a(n);
  auto idx = [&](int i, int j) {
    const auto ii = static_cast<std::size_t>((i + m) % m);
    const auto jj = static_cast<std::size_t>((j + m) % m);
    return dim == 1 ? ii : ii * mu + jj;
  };
  // -(d + 2 pi i theta) s (d + 2 pi i theta) u = e^{-2 pi i theta y} [-(d s d)] (e^{2 pi i theta y} u)
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < (dim == 1 ? 1 : m); ++j) {
      const std::size_t r = idx(i, j);
      a(r, r) += potential.samples()[r];
      for (int axis = 0; axis < dim; ++axis) {
        const auto& s = sigma(axis, axis).samples();
        const int di = axis == 0 ? 1 : 0;
        const int dj = axis == 1 ? 1 : 0;
        const std::size_t up = idx(i + di, j + dj);
        const std::size_t dn = idx(i - di, j - dj);
        const double s_up = 0.5 * (s[r] + s[up]);
        const double s_dn = 0.5 * (s[r] + s[dn]);
        const cplx ph = std::polar(1.0, kTwoPi * theta[axis] * h);
        a(r, r) += (s_up + s_dn) / (h * h);
        a(r, up) -= s_up * ph / (h * h);
        a(r, dn) -= s_dn * std::conj(ph) / (h * h);
      }
    }
  }
  return a;
}

std::vector<BandRow> sample_bands(const CellProblem& problem, const std::vector<Point>& thetas, int n_bands,
                                  Exec exec) {
  std::vector<std::vector<BandRow>> per(thetas.size());
  JacobiOptions jopt;
  // Parallelism is across frequencies; each solve runs the serial kernel.
  jopt.exec = Exec::serial;
  auto one = [&](std::size_t t) {
    const BlochOperator op = assemble_cell_operator(problem, thetas[t], Exec::serial);
    const auto pairs = solve_spectrum(op, n_bands, jopt);
    for (const auto& p : pairs) per[t].push_back({thetas[t], p.band, p.eigenvalue});
  };
  parallel_for(thetas.size(), exec, one);
  std::vector<BandRow> rows;
  for (auto& v : per) rows.insert(rows.end(), v.begin(), v.end());
  return rows;
}

}  // namespace blochhom
