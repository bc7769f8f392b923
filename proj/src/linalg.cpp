#include "blochhom/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "blochhom/error.hpp"
#include "blochhom/io.hpp"

namespace blochhom {

CVector CMatrix::operator*(const CVector& x) const {
  CVector y(n_, cplx{});
  for (std::size_t i = 0; i < n_; ++i) {
    cplx s{};
    const cplx* row = &a_[i * n_];
    for (std::size_t j = 0; j < n_; ++j) s += row[j] * x[j];
    y[i] = s;
  }
  return y;
}

CVector CMatrix::column(std::size_t j) const {
  CVector c(n_);
  for (std::size_t i = 0; i < n_; ++i) c[i] = (*this)(i, j);
  return c;
}

double CMatrix::frobenius_norm() const {
  double s = 0.0;
  for (const auto& v : a_) s += std::norm(v);
  return std::sqrt(s);
}

double CMatrix::hermitian_defect() const {
  double d = 0.0;
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = i; j < n_; ++j) d = std::max(d, std::abs((*this)(i, j) - std::conj((*this)(j, i))));
  return d;
}

void CMatrix::add_to_diagonal(double shift) {
  for (std::size_t i = 0; i < n_; ++i) (*this)(i, i) += shift;
}

namespace {

struct Rotation {
  std::size_t p, q;
  double c, s;
  cplx phase;  // e^{i phi} with a_pq = |a_pq| e^{i phi}
  double app, aqq;
  bool active;
};

double off_norm(const CMatrix& a) {
  double s = 0.0;
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) s += std::norm(a(i, j));
  return std::sqrt(s);
}

Rotation make_rotation(const CMatrix& a, std::size_t p, std::size_t q, bool drop_negligible,
                       double threshold) {
  Rotation r{p, q, 1.0, 0.0, cplx{1.0, 0.0}, a(p, p).real(), a(q, q).real(), false};
  const cplx apq = a(p, q);
  const double mag = std::abs(apq);
  if (mag == 0.0 || mag < threshold) return r;
  // Element below roundoff of both diagonal entries: zero it without rotating.
  if (drop_negligible && std::abs(r.app) + 100.0 * mag == std::abs(r.app) &&
      std::abs(r.aqq) + 100.0 * mag == std::abs(r.aqq)) {
    r.active = true;
    return r;
  }
  const double theta = 0.5 * (r.aqq - r.app) / mag;
  const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
  r.c = 1.0 / std::sqrt(t * t + 1.0);
  r.s = t * r.c;
  r.phase = apq / mag;
  r.app -= t * mag;
  r.aqq += t * mag;
  r.active = true;
  return r;
}

// A <- A U on columns p, q for all rows; also used for V.
void rotate_columns(CMatrix& a, const Rotation& r) {
  const std::size_t n = a.size();
  const cplx u_qp = -r.s * std::conj(r.phase);
  const cplx u_pq = r.s * r.phase;
  for (std::size_t k = 0; k < n; ++k) {
    const cplx akp = a(k, r.p);
    const cplx akq = a(k, r.q);
    a(k, r.p) = akp * r.c + akq * u_qp;
    a(k, r.q) = akp * u_pq + akq * r.c;
  }
}

// A <- U^H A on rows p, q for all columns.
void rotate_rows(CMatrix& a, const Rotation& r) {
  const std::size_t n = a.size();
  const cplx w_pq = -r.s * r.phase;           // conj(U_qp)
  const cplx w_qp = r.s * std::conj(r.phase);  // conj(U_pq)
  for (std::size_t k = 0; k < n; ++k) {
    const cplx apk = a(r.p, k);
    const cplx aqk = a(r.q, k);
    a(r.p, k) = r.c * apk + w_pq * aqk;
    a(r.q, k) = w_qp * apk + r.c * aqk;
  }
}

void finish_block(CMatrix& a, const Rotation& r) {
  a(r.p, r.p) = r.app;
  a(r.q, r.q) = r.aqq;
  a(r.p, r.q) = cplx{};
  a(r.q, r.p) = cplx{};
}

void serial_sweep(CMatrix& a, CMatrix& v, bool drop_negligible, double threshold) {
  const std::size_t n = a.size();
  for (std::size_t p = 0; p + 1 < n; ++p) {
    for (std::size_t q = p + 1; q < n; ++q) {
      const Rotation r = make_rotation(a, p, q, drop_negligible, threshold);
      if (!r.active) continue;
      if (r.s != 0.0) {
        rotate_columns(a, r);
        rotate_rows(a, r);
        rotate_columns(v, r);
      }
      finish_block(a, r);
    }
  }
}

// Round-robin (tournament) ordering: every round is a set of disjoint pairs,
// so the rotations of one round commute and are applied concurrently.
void parallel_sweep(CMatrix& a, CMatrix& v, bool drop_negligible, double threshold) {
  const std::size_t n = a.size();
  const std::size_t m = n + (n % 2);
  std::vector<std::size_t> slots(m);
  std::iota(slots.begin(), slots.end(), std::size_t{0});
  std::vector<Rotation> round(m / 2);

  for (std::size_t step = 0; step + 1 < m; ++step) {
    std::size_t count = 0;
    for (std::size_t k = 0; k < m / 2; ++k) {
      std::size_t p = slots[k];
      std::size_t q = slots[m - 1 - k];
      if (p >= n || q >= n) continue;
      if (p > q) std::swap(p, q);
      round[count++] = make_rotation(a, p, q, drop_negligible, threshold);
    }
    const auto count_i = static_cast<long>(count);
#pragma omp parallel
    {
#pragma omp for schedule(static)
      for (long k = 0; k < count_i; ++k) {
        const Rotation& r = round[static_cast<std::size_t>(k)];
        if (r.active && r.s != 0.0) {
          rotate_columns(a, r);
          rotate_columns(v, r);
        }
      }
#pragma omp for schedule(static)
      for (long k = 0; k < count_i; ++k) {
        const Rotation& r = round[static_cast<std::size_t>(k)];
        if (r.active && r.s != 0.0) rotate_rows(a, r);
      }
    }
    for (std::size_t k = 0; k < count; ++k)
      if (round[k].active) finish_block(a, round[k]);
    std::rotate(slots.begin() + 1, slots.end() - 1, slots.end());
  }
}

}  // namespace

HermitianEigen jacobi_eigen(CMatrix a, const JacobiOptions& options) {
  const std::size_t n = a.size();
  CMatrix v(n);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;
  for (std::size_t i = 0; i < n; ++i) a(i, i) = a(i, i).real();

  const double scale = a.frobenius_norm();
  int sweeps = 0;
  bool cleanup_done = false;
  double off = off_norm(a);
  while (off > 0.0) {
    if (off <= options.tol * scale) {
      if (cleanup_done) break;
      cleanup_done = true;
    }
    if (sweeps >= options.max_sweeps)
      throw ConvergenceError("Jacobi eigensolver did not converge in " +
                             std::to_string(options.max_sweeps) + " sweeps (off-diagonal norm " +
                             io::brief(off) + ")");
    const bool drop = sweeps >= 4;
    // Early sweeps only rotate the larger elements.
    double threshold = 0.0;
    if (sweeps < 3) {
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) sum += std::abs(a(i, j));
      threshold = 0.2 * sum / static_cast<double>(n * n);
    }
    if (options.exec == Exec::parallel) parallel_sweep(a, v, drop, threshold);
    else serial_sweep(a, v, drop, threshold);
    ++sweeps;
    off = off_norm(a);
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i).real() < a(j, j).real(); });

  HermitianEigen out;
  out.values.resize(n);
  out.vectors = CMatrix(n);
  for (std::size_t j = 0; j < n; ++j) {
    out.values[j] = a(order[j], order[j]).real();
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
  }
  out.sweeps = sweeps;
  out.final_off_norm = off;
  return out;
}

ComplexLu::ComplexLu(CMatrix a) : lu_(std::move(a)), perm_(lu_.size()) {
  const std::size_t n = lu_.size();
  std::iota(perm_.begin(), perm_.end(), std::size_t{0});
  double pmin = std::numeric_limits<double>::infinity(), pmax = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    double best = std::abs(lu_(k, k));
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(lu_(i, k)) > best) {
        best = std::abs(lu_(i, k));
        piv = i;
      }
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(piv, j));
      std::swap(perm_[k], perm_[piv]);
    }
    pmin = std::min(pmin, best);
    pmax = std::max(pmax, best);
    if (best == 0.0) continue;
    const cplx inv = 1.0 / lu_(k, k);
    for (std::size_t i = k + 1; i < n; ++i) {
      const cplx f = lu_(i, k) * inv;
      lu_(i, k) = f;
      if (f == cplx{}) continue;
      for (std::size_t j = k + 1; j < n; ++j) lu_(i, j) -= f * lu_(k, j);
    }
  }
  pivot_ratio_ = (n == 0 || pmax == 0.0) ? 0.0 : pmin / pmax;
}

CVector ComplexLu::solve(const CVector& b) const {
  const std::size_t n = lu_.size();
  CVector x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = b[perm_[i]];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) x[i] -= lu_(i, j) * x[j];
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = i + 1; j < n; ++j) x[i] -= lu_(i, j) * x[j];
    x[i] /= lu_(i, i);
  }
  return x;
}

BandedSymmetric::BandedSymmetric(std::size_t n, std::size_t bandwidth)
    : n_(n), bw_(bandwidth), a_(n * (bandwidth + 1), 0.0) {}

double BandedSymmetric::entry(std::size_t i, std::size_t j) const {
  if (j > i) std::swap(i, j);
  if (i - j > bw_) return 0.0;
  return lower(i, j);
}

void BandedSymmetric::multiply(std::span<const cplx> x, std::span<cplx> y) const {
  for (std::size_t i = 0; i < n_; ++i) y[i] = cplx{};
  for (std::size_t i = 0; i < n_; ++i) {
    const std::size_t j0 = i > bw_ ? i - bw_ : 0;
    for (std::size_t j = j0; j < i; ++j) {
      const double l = lower(i, j);
      y[i] += l * x[j];
      y[j] += l * x[i];
    }
    y[i] += lower(i, i) * x[i];
  }
}

void BandedSymmetric::factorize() {
  double min_pivot = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n_; ++j) {
    const std::size_t k0 = j > bw_ ? j - bw_ : 0;
    double d = lower(j, j);
    for (std::size_t k = k0; k < j; ++k) d -= lower(j, k) * lower(j, k) * lower(k, k);
    min_pivot = std::min(min_pivot, d);
    if (!(d > 0.0)) {
      min_pivot_ = min_pivot;
      throw FactorizationError("implicit step operator is not positive definite (minimum pivot " +
                                   io::brief(d) + " at row " + std::to_string(j) + ")",
                               d);
    }
    lower(j, j) = d;
    const std::size_t i_end = std::min(n_ - 1, j + bw_);
    for (std::size_t i = j + 1; i <= i_end; ++i) {
      const std::size_t kk = i > bw_ ? i - bw_ : 0;
      double s = lower(i, j);
      for (std::size_t k = std::max(k0, kk); k < j; ++k) s -= lower(i, k) * lower(j, k) * lower(k, k);
      lower(i, j) = s / d;
    }
  }
  min_pivot_ = min_pivot;
  factorized_ = true;
}

void BandedSymmetric::solve_in_place(std::span<cplx> b) const {
  for (std::size_t i = 0; i < n_; ++i) {
    const std::size_t j0 = i > bw_ ? i - bw_ : 0;
    cplx s = b[i];
    for (std::size_t j = j0; j < i; ++j) s -= lower(i, j) * b[j];
    b[i] = s;
  }
  for (std::size_t i = 0; i < n_; ++i) b[i] /= lower(i, i);
  for (std::size_t i = n_; i-- > 0;) {
    const std::size_t j_end = std::min(n_ - 1, i + bw_);
    cplx s = b[i];
    for (std::size_t j = i + 1; j <= j_end; ++j) s -= lower(j, i) * b[j];
    b[i] = s;
  }
}

}  // namespace blochhom
