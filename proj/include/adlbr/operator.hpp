#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "adlbr/grid.hpp"
#include "adlbr/rng.hpp"
#include "adlbr/stencil.hpp"

namespace adlbr {

enum class Scheme { adlbr, ann, fd };

/// Symmetric sparse matrix of the quadratic form h^-d E_h over grid cells
/// (CSR storage). Row sums vanish for both boundary conditions; for the
/// stencil schemes off-diagonal entries are <= 0.
template <int N>
struct SparseOperator {
  Grid<N> grid;
  Scheme scheme = Scheme::adlbr;
  std::vector<std::size_t> row_ptr;
  std::vector<int> cols;
  std::vector<double> vals;

  std::size_t rows() const { return row_ptr.empty() ? 0 : row_ptr.size() - 1; }

  void apply(const std::vector<double>& u, std::vector<double>& out) const {
    const std::size_t n = rows();
    out.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0;
      for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
        s += vals[k] * u[cols[k]];
      out[i] = s;
    }
  }
  std::vector<double> apply(const std::vector<double>& u) const {
    std::vector<double> out;
    apply(u, out);
    return out;
  }
  double entry(std::size_t i, int j) const {
    for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
      if (cols[k] == j) return vals[k];
    return 0.0;
  }
  double max_diagonal() const {
    double d = 0;
    for (std::size_t i = 0; i < rows(); ++i) d = std::max(d, entry(i, static_cast<int>(i)));
    return d;
  }
};

namespace detail {

struct Triplet {
  int r, c;
  double v;
};

// Deterministic CSR compression. Diagonal contributions accumulate densely
// (they are two thirds of all contributions); off-diagonal triplets arrive
// in the upper triangle only (r < c), are bucketed per row (stable counting
// sort, O(nnz)) and merged with an insertion sort over the handful of
// per-row entries, then mirrored. The matrix is bit-exactly symmetric
// regardless of accumulation order.
template <int N>
inline SparseOperator<N> compress(const Grid<N>& grid, Scheme scheme,
                                  std::vector<double>& diag,
                                  std::vector<Triplet>& trip) {
  const std::size_t n = grid.cells();

  std::vector<std::size_t> start(n + 1, 0);
  for (const Triplet& t : trip) ++start[t.r + 1];
  for (std::size_t i = 0; i < n; ++i) start[i + 1] += start[i];
  std::vector<Triplet> rows(trip.size());
  {
    std::vector<std::size_t> cursor(start.begin(), start.end() - 1);
    for (const Triplet& t : trip) rows[cursor[t.r]++] = t;
  }

  // Merge duplicates per row in column order (stable insertion sort; rows
  // hold at most a few dozen entries).
  std::vector<std::size_t> upper_end(n, 0), lower_count(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row_begin = rows.begin() + start[i], row_end = rows.begin() + start[i + 1];
    for (auto it = row_begin; it != row_end; ++it) {
      auto pos = it;
      while (pos != row_begin && std::prev(pos)->c > it->c) --pos;
      const Triplet t = *it;
      std::move_backward(pos, it, it + 1);
      *pos = t;
    }
    auto out = row_begin;
    for (auto it = row_begin; it != row_end;) {
      auto next = it;
      double v = 0;
      while (next != row_end && next->c == it->c) v += (next++)->v;
      *out++ = {it->r, it->c, v};
      ++lower_count[it->c];
      it = next;
    }
    upper_end[i] = static_cast<std::size_t>(out - rows.begin());
  }

  SparseOperator<N> op;
  op.grid = grid;
  op.scheme = scheme;
  op.row_ptr.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i)
    op.row_ptr[i + 1] = lower_count[i] + 1 + (upper_end[i] - start[i]);
  for (std::size_t i = 0; i < n; ++i) op.row_ptr[i + 1] += op.row_ptr[i];
  op.cols.assign(op.row_ptr[n], 0);
  op.vals.assign(op.row_ptr[n], 0.0);

  // mirrored (lower) entries: scanning merged rows in order fills each
  // target row by ascending source row, keeping columns sorted
  std::vector<std::size_t> cursor(n);
  for (std::size_t i = 0; i < n; ++i) cursor[i] = op.row_ptr[i];
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = start[i]; k < upper_end[i]; ++k) {
      const std::size_t j = static_cast<std::size_t>(rows[k].c);
      op.cols[cursor[j]] = static_cast<int>(i);
      op.vals[cursor[j]] = rows[k].v;
      ++cursor[j];
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    op.cols[cursor[i]] = static_cast<int>(i);
    op.vals[cursor[i]] = diag[i];
    ++cursor[i];
    for (std::size_t k = start[i]; k < upper_end[i]; ++k) {
      op.cols[cursor[i]] = rows[k].c;
      op.vals[cursor[i]] = rows[k].v;
      ++cursor[i];
    }
  }
  return op;
}

// Pair contribution of a squared difference w (u_i - u_j)^2; off-diagonal
// kept in the upper triangle for the symmetric mirror in compress().
inline void add_pair(std::vector<double>& diag, std::vector<Triplet>& trip, int i, int j,
                     double w) {
  if (i == j) return;  // wrapped-around arm, zero difference
  diag[i] += w;
  diag[j] += w;
  trip.push_back({std::min(i, j), std::max(i, j), -w});
}

// v at both (i,j) and (j,i); indices folded together land on the diagonal.
inline void add_sym(std::vector<double>& diag, std::vector<Triplet>& trip, int i, int j,
                    double v) {
  if (i == j)
    diag[i] += 2.0 * v;
  else
    trip.push_back({std::min(i, j), std::max(i, j), v});
}

template <int N>
inline Stencil<N> scheme_stencil(const SymMat<N>& d, Scheme scheme) {
  if constexpr (N == 2) {
    return scheme == Scheme::adlbr ? adlbr_stencil_2d(d) : ann_stencil_2d(d);
  } else {
    return adlbr_stencil_3d(d);
  }
}

template <int N>
inline SparseOperator<N> assemble_stencil_scheme(const TensorField<N>& t, Scheme scheme) {
  const Grid<N>& g = t.grid;
  const double w0 = 1.0 / (g.spacing * g.spacing);
  std::vector<double> diag(g.cells(), 0.0);
  std::vector<Triplet> trip;
  trip.reserve(g.cells() * (N == 2 ? 6 : 12));

  // Constant fields are common (benchmarks, spectra): reuse one stencil.
  const bool constant = std::all_of(t.tensors.begin(), t.tensors.end(),
                                    [&](const SymMat<N>& m) { return m.a == t.tensors[0].a; });
  Stencil<N> shared;
  if (constant) shared = scheme_stencil(t.tensors[0], scheme);

  const std::size_t n = g.cells();
  for (std::size_t i = 0; i < n; ++i) {
    const Stencil<N> local = constant ? shared : scheme_stencil(t.tensors[i], scheme);
    const auto x = g.coords(i);
    for (const auto& arm : local.arms) {
      if (arm.weight == 0) continue;
      std::array<int, N> y = x;
      for (int k = 0; k < N; ++k) y[k] += arm.offset.c[k];
      if (g.bc == Boundary::periodic) {
        y = g.wrap(y);
      } else if (!g.contains(y)) {
        continue;  // V(z; h) truncation
      }
      add_pair(diag, trip, static_cast<int>(i), static_cast<int>(g.index(y)),
               arm.weight * w0);
    }
  }
  return compress(g, scheme, diag, trip);
}

// Centered finite differences with tensors on the half grid
// (i+1/2, j+1/2), obtained by averaging the four adjacent cell tensors.
// Periodic wraps; Neumann uses duplicate-edge mirror ghost cells.
inline SparseOperator<2> assemble_fd(const TensorField<2>& t) {
  const Grid<2>& g = t.grid;
  const int nx = g.extents[0], ny = g.extents[1];
  const double w0 = 1.0 / (g.spacing * g.spacing);
  const bool periodic = g.bc == Boundary::periodic;
  std::vector<double> diag(g.cells(), 0.0);
  std::vector<Triplet> trip;
  trip.reserve(g.cells() * 4);

  auto cell = [&](int x, int y) -> const SymMat2& {
    std::array<int, 2> p{x, y};
    p = periodic ? g.wrap(p) : g.reflect(p);
    return t.tensors[g.index(p)];
  };
  auto half = [&](int x, int y) {  // tensor at (x+1/2, y+1/2)
    return (cell(x, y) + cell(x + 1, y) + cell(x, y + 1) + cell(x + 1, y + 1)) * 0.25;
  };
  auto node = [&](int x, int y) -> int {
    std::array<int, 2> p{x, y};
    p = periodic ? g.wrap(p) : g.reflect(p);
    return static_cast<int>(g.index(p));
  };

  // x-edges: D11 averaged over the two adjacent half cells.
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x < (periodic ? nx : nx - 1); ++x) {
      const double m = 0.5 * (half(x, y)(0, 0) + half(x, y - 1)(0, 0));
      add_pair(diag, trip, node(x, y), node(x + 1, y), m * w0);
    }
  // y-edges: D22 averaged.
  for (int y = 0; y < (periodic ? ny : ny - 1); ++y)
    for (int x = 0; x < nx; ++x) {
      const double m = 0.5 * (half(x, y)(1, 1) + half(x - 1, y)(1, 1));
      add_pair(diag, trip, node(x, y), node(x, y + 1), m * w0);
    }
  // cross terms per half cell; boundary half cells fold onto mirrored nodes.
  const int x0 = periodic ? 0 : -1, y0 = periodic ? 0 : -1;
  for (int y = y0; y < ny; ++y)
    for (int x = x0; x < nx; ++x) {
      const double b = half(x, y)(0, 1) * 0.5 * w0;
      if (b == 0) continue;
      const int i00 = node(x, y), i10 = node(x + 1, y);
      const int i01 = node(x, y + 1), i11 = node(x + 1, y + 1);
      diag[i00] += b;
      diag[i11] += b;
      diag[i10] -= b;
      diag[i01] -= b;
      add_sym(diag, trip, i00, i11, -b);
      add_sym(diag, trip, i10, i01, b);
    }
  return compress(g, Scheme::fd, diag, trip);
}

}  // namespace detail

/// Assemble the matrix A of the quadratic form h^-d E_h, so that
/// u^T A u = h^-d E_h(u). For each cell z and admissible stencil arm e,
/// gamma_z(e) h^-2 is added to A[z,z] and A[z',z'] and subtracted from the
/// off-diagonal pair, z' = z + e; the (z,z') coupling therefore carries
/// gamma_z(e) + gamma_z'(-e).
template <int N>
inline SparseOperator<N> assemble(const TensorField<N>& t, Scheme scheme) {
  for (int e : t.grid.extents)
    if (e < 3) throw std::invalid_argument("assemble: grid extent < 3");
  for (const auto& m : t.tensors) require_spd(m);
  if (scheme == Scheme::fd) {
    if constexpr (N == 2) {
      return detail::assemble_fd(t);
    } else {
      throw std::invalid_argument("FD scheme is 2D only");
    }
  }
  if (scheme == Scheme::ann && N != 2)
    throw std::invalid_argument("A-NN scheme is 2D only");
  return detail::assemble_stencil_scheme(t, scheme);
}

/// Direct evaluation of E_h(u) = h^(d-2) sum_z sum_e gamma_z(e)
/// |u(z + h e) - u(z)|^2 with the field's boundary rule (AD-LBR weights).
/// Agrees with h^d u^T assemble(t, adlbr) u.
template <int N>
inline double energy(const ScalarField<N>& u, const TensorField<N>& t) {
  if (!(u.grid == t.grid)) throw std::invalid_argument("energy: grid mismatch");
  const Grid<N>& g = u.grid;
  double acc = 0;
  const std::size_t n = g.cells();
  for (std::size_t i = 0; i < n; ++i) {
    Stencil<N> st;
    if constexpr (N == 2)
      st = adlbr_stencil_2d(t.tensors[i]);
    else
      st = adlbr_stencil_3d(t.tensors[i]);
    const auto x = g.coords(i);
    for (const auto& arm : st.arms) {
      if (arm.weight == 0) continue;
      std::array<int, N> y = x;
      for (int k = 0; k < N; ++k) y[k] += arm.offset.c[k];
      if (g.bc == Boundary::periodic)
        y = g.wrap(y);
      else if (!g.contains(y))
        continue;
      const double du = u.values[g.index(y)] - u.values[i];
      acc += arm.weight * du * du;
    }
  }
  return acc * std::pow(g.spacing, N - 2);
}

/// One explicit Euler step u - dt A u. Stability is the caller's concern.
template <int N>
inline ScalarField<N> explicit_step(const ScalarField<N>& u, const SparseOperator<N>& a,
                                    double dt) {
  if (!(dt > 0)) throw std::invalid_argument("explicit_step: dt <= 0");
  if (u.values.size() != a.rows()) throw std::invalid_argument("explicit_step: size mismatch");
  ScalarField<N> out = u;
  std::vector<double> au;
  a.apply(u.values, au);
  for (std::size_t i = 0; i < au.size(); ++i) out.values[i] = u.values[i] - dt * au[i];
  return out;
}

/// Conjugate gradients for (I + lambda A) u = v, stopping at
/// ||r||_2 <= tol ||v||_2. Optionally Jacobi-preconditioned; the plain
/// iteration is the default since I + lambda A is well conditioned for the
/// restoration values of lambda.
template <int N>
inline ScalarField<N> cg_solve(const SparseOperator<N>& a, double lambda,
                               const ScalarField<N>& v, double tol,
                               bool jacobi = false) {
  if (lambda < 0) throw std::invalid_argument("cg_solve: lambda < 0");
  if (!(tol > 0)) throw std::invalid_argument("cg_solve: tol <= 0");
  if (v.values.size() != a.rows()) throw std::invalid_argument("cg_solve: size mismatch");
  const std::size_t n = a.rows();
  const std::size_t max_iter = 10 * n;

  std::vector<double> diag(n, 1.0);
  if (jacobi)
    for (std::size_t i = 0; i < n; ++i)
      diag[i] = 1.0 + lambda * a.entry(i, static_cast<int>(i));

  auto mat = [&](const std::vector<double>& x, std::vector<double>& out) {
    a.apply(x, out);
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + lambda * out[i];
  };

  std::vector<double> u(n, 0.0), r = v.values, z(n), p(n), ap(n);
  double vnorm = 0;
  for (double x : v.values) vnorm += x * x;
  vnorm = std::sqrt(vnorm);
  if (vnorm == 0) return ScalarField<N>(v.grid, 0.0);

  for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / diag[i];
  p = z;
  double rz = 0;
  for (std::size_t i = 0; i < n; ++i) rz += r[i] * z[i];

  double rnorm = vnorm;
  for (std::size_t it = 0; it < max_iter; ++it) {
    if (rnorm <= tol * vnorm) {
      ScalarField<N> out(v.grid);
      out.values = u;
      return out;
    }
    mat(p, ap);
    double pap = 0;
    for (std::size_t i = 0; i < n; ++i) pap += p[i] * ap[i];
    const double alpha = rz / pap;
    rnorm = 0;
    for (std::size_t i = 0; i < n; ++i) {
      u[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
      rnorm += r[i] * r[i];
    }
    rnorm = std::sqrt(rnorm);
    for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / diag[i];
    double rz_new = 0;
    for (std::size_t i = 0; i < n; ++i) rz_new += r[i] * z[i];
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  if (rnorm <= tol * vnorm) {
    ScalarField<N> out(v.grid);
    out.values = u;
    return out;
  }
  throw std::runtime_error("cg_solve: iteration cap exceeded, residual " +
                           std::to_string(rnorm / vnorm));
}

/// Largest eigenvalue by power iteration from a seeded random start.
/// Stops when ||A v - lambda v|| <= 1e-6 lambda (for symmetric A this
/// bounds the eigenvalue error by the same amount).
template <int N>
inline double eigen_max(const SparseOperator<N>& a, std::uint64_t seed = 42,
                        double rel_tol = 1e-6, std::size_t max_iter = 100000) {
  const std::size_t n = a.rows();
  Rng rng(seed);
  std::vector<double> v(n), av(n);
  for (auto& x : v) x = rng.normal();
  double nrm = 0;
  for (double x : v) nrm += x * x;
  nrm = std::sqrt(nrm);
  for (auto& x : v) x /= nrm;

  double lambda = 0;
  for (std::size_t it = 0; it < max_iter; ++it) {
    a.apply(v, av);
    lambda = 0;
    for (std::size_t i = 0; i < n; ++i) lambda += v[i] * av[i];
    double res = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = av[i] - lambda * v[i];
      res += d * d;
    }
    if (std::sqrt(res) <= rel_tol * std::max(lambda, 1e-300)) return lambda;
    nrm = 0;
    for (double x : av) nrm += x * x;
    nrm = std::sqrt(nrm);
    if (nrm == 0) return 0.0;
    for (std::size_t i = 0; i < n; ++i) v[i] = av[i] / nrm;
  }
  throw std::runtime_error("eigen_max: power iteration did not converge");
}

namespace detail {

// Cyclic Jacobi on a dense symmetric matrix (values only).
inline std::vector<double> jacobi_eigenvalues(std::vector<double>& m, std::size_t n) {
  double scale = 0;
  for (double x : m) scale = std::max(scale, std::abs(x));
  if (scale == 0) return std::vector<double>(n, 0.0);
  auto at = [&](std::size_t i, std::size_t j) -> double& { return m[i * n + j]; };
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off = std::max(off, std::abs(at(p, q)));
    if (off <= 1e-14 * scale) break;
    const double thresh = (sweep < 3) ? 0.02 * off : 0.0;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = at(p, q);
        if (std::abs(apq) <= std::max(thresh, 1e-300)) continue;
        const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = at(k, p), akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = at(p, k), aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = at(i, i);
  std::sort(ev.begin(), ev.end());
  return ev;
}

}  // namespace detail

/// k smallest eigenvalues (ascending) by dense cyclic Jacobi.
/// Restricted to small grids; the intended regime is n <= 12 sweeps.
template <int N>
inline std::vector<double> eigen_smallest(const SparseOperator<N>& a, int k) {
  const std::size_t n = a.rows();
  if (n > 4096) throw std::invalid_argument("eigen_smallest: grid too large for dense solve");
  if (k < 1 || static_cast<std::size_t>(k) > n)
    throw std::invalid_argument("eigen_smallest: bad k");
  std::vector<double> dense(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t kk = a.row_ptr[i]; kk < a.row_ptr[i + 1]; ++kk)
      dense[i * n + a.cols[kk]] = a.vals[kk];
  std::vector<double> ev = detail::jacobi_eigenvalues(dense, n);
  ev.resize(k);
  return ev;
}

/// MatrixMarket coordinate text (1-based, general symmetric content
/// written explicitly).
template <int N>
inline void write_matrix_market(const SparseOperator<N>& a, std::ostream& os) {
  os << "%%MatrixMarket matrix coordinate real general\n";
  std::size_t nnz = 0;
  for (double v : a.vals)
    if (v != 0) ++nnz;
  os << a.rows() << " " << a.rows() << " " << nnz << "\n";
  os.precision(17);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k)
      if (a.vals[k] != 0) os << i + 1 << " " << a.cols[k] + 1 << " " << a.vals[k] << "\n";
}

}  // namespace adlbr
