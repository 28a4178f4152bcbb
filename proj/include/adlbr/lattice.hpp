#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include "adlbr/sym.hpp"

namespace adlbr {

template <int N>
using Basis = std::array<Offset<N>, N>;
template <int N>
using Superbase = std::array<Offset<N>, N + 1>;

using Basis2 = Basis<2>;
using Basis3 = Basis<3>;
using Superbase2 = Superbase<2>;
using Superbase3 = Superbase<3>;

namespace detail {

inline long long round_half_away(double x) { return std::llround(x); }

// Relative slack when comparing squared norms, so exact ties never loop.
constexpr double norm_tie_eps = 1e-14;

}  // namespace detail

/// Lagrange's reduction of Z^2 for the quadratic form M.
/// Returns (e, f) with |e|_M <= |f|_M, |det| = 1 and both Minkowski
/// minimality conditions satisfied. The canonical basis is returned
/// unchanged when it is already reduced. Runs O(log kappa(M)) steps.
inline Basis2 lagrange_reduce(const SymMat2& m, int* iterations = nullptr) {
  require_spd(m);
  Offset<2> e{{1, 0}}, f{{0, 1}};
  double qe = m.quad(e), qf = m.quad(f);
  if (qe > qf) {
    std::swap(e, f);
    std::swap(qe, qf);
  }
  int count = 0;
  while (true) {
    const long long r = detail::round_half_away(m.inner(f, e) / qe);
    f = f - e * static_cast<int>(r);
    qf = m.quad(f);
    ++count;
    if (qf >= qe * (1.0 - detail::norm_tie_eps)) break;
    std::swap(e, f);
    std::swap(qe, qf);
  }
  if (iterations) *iterations = count;
  return {e, f};
}

namespace detail {

// Lagrange reduction of an arbitrary starting pair (sublattice-preserving).
inline void lagrange_pair(const SymMat3& m, Offset<3>& e, Offset<3>& f) {
  double qe = m.quad(e), qf = m.quad(f);
  if (qe > qf) {
    std::swap(e, f);
    std::swap(qe, qf);
  }
  while (true) {
    const long long r = round_half_away(m.inner(f, e) / qe);
    f = f - e * static_cast<int>(r);
    qf = m.quad(f);
    if (qf >= qe * (1.0 - norm_tie_eps)) break;
    std::swap(e, f);
    std::swap(qe, qf);
  }
}

}  // namespace detail

/// Greedy Minkowski reduction of Z^3 for the form M: sort by M-norm,
/// Lagrange-reduce the two shortest, then reduce the longest against the
/// rank-2 sublattice they span (integer coefficients searched over the
/// 3x3 rounding neighborhood of the real least-squares solution).
/// Every step is unimodular and strictly decreases a norm, so the loop
/// terminates with a basis; minimality is checked by the test oracle.
inline Basis3 reduce3(const SymMat3& m) {
  require_spd(m);
  std::array<Offset<3>, 3> b = {Offset<3>{{1, 0, 0}}, Offset<3>{{0, 1, 0}},
                                Offset<3>{{0, 0, 1}}};
  auto by_norm = [&](const Offset<3>& u, const Offset<3>& v) {
    return m.quad(u) < m.quad(v);
  };
  for (int pass = 0; pass < 256; ++pass) {
    std::stable_sort(b.begin(), b.end(), by_norm);
    const double before = m.quad(b[0]) + m.quad(b[1]) + m.quad(b[2]);
    detail::lagrange_pair(m, b[0], b[1]);

    // Closest point of the sublattice b0 Z + b1 Z to b2: least squares in
    // the Gram basis, then the 3x3 integer neighborhood.
    const double g00 = m.quad(b[0]), g01 = m.inner(b[0], b[1]), g11 = m.quad(b[1]);
    const double r0 = m.inner(b[0], b[2]), r1 = m.inner(b[1], b[2]);
    const double dg = g00 * g11 - g01 * g01;
    const double x = (g11 * r0 - g01 * r1) / dg;
    const double y = (g00 * r1 - g01 * r0) / dg;
    Offset<3> best = b[2];
    double best_q = m.quad(b[2]);
    for (int dp = -1; dp <= 1; ++dp) {
      for (int dq = -1; dq <= 1; ++dq) {
        const int p = static_cast<int>(detail::round_half_away(x)) + dp;
        const int q = static_cast<int>(detail::round_half_away(y)) + dq;
        const Offset<3> cand = b[2] - b[0] * p - b[1] * q;
        const double qc = m.quad(cand);
        if (qc < best_q * (1.0 - detail::norm_tie_eps)) {
          best = cand;
          best_q = qc;
        }
      }
    }
    b[2] = best;
    const double after = m.quad(b[0]) + m.quad(b[1]) + m.quad(b[2]);
    if (after >= before * (1.0 - detail::norm_tie_eps)) break;
  }
  std::stable_sort(b.begin(), b.end(), by_norm);
  return {b[0], b[1], b[2]};
}

/// Minkowski minima (lambda_1, ..., lambda_d), ascending.
inline std::array<double, 2> minkowski_minima(const SymMat2& m) {
  const Basis2 b = lagrange_reduce(m);
  return {std::sqrt(m.quad(b[0])), std::sqrt(m.quad(b[1]))};
}
inline std::array<double, 3> minkowski_minima(const SymMat3& m) {
  const Basis3 b = reduce3(m);
  return {std::sqrt(m.quad(b[0])), std::sqrt(m.quad(b[1])), std::sqrt(m.quad(b[2]))};
}

/// mu(M) = |<e, M f>| for a reduced basis; equals
/// sqrt(lambda_1^2 lambda_2^2 - det M), and vanishes iff Z^2 admits an
/// M-orthogonal basis.
inline double mu(const SymMat2& m) {
  const Basis2 b = lagrange_reduce(m);
  return std::abs(m.inner(b[0], b[1]));
}

/// M-obtuse superbase (e, f, g): reduce, flip f so <e,Mf> <= 0, g = -e-f.
inline Superbase2 obtuse_superbase2(const SymMat2& m) {
  Basis2 b = lagrange_reduce(m);
  if (m.inner(b[0], b[1]) > 0) b[1] = -b[1];
  return {b[0], b[1], -(b[0] + b[1])};
}

/// D-obtuse superbase of Z^3: permute and sign the reduced basis so that
/// |<b1,D b2>| <= -<b1,D b3> and <= -<b2,D b3>, then apply the two-case
/// completion. Ties in the permutation choice go to the lexicographically
/// smallest index triple.
inline Superbase3 obtuse_superbase3(const SymMat3& d) {
  const Basis3 e = reduce3(d);
  static constexpr int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                      {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  int chosen = 0;
  for (int k = 0; k < 6; ++k) {
    const auto& p = perms[k];
    const double p12 = std::abs(d.inner(e[p[0]], e[p[1]]));
    const double p13 = std::abs(d.inner(e[p[0]], e[p[2]]));
    const double p23 = std::abs(d.inner(e[p[1]], e[p[2]]));
    const double tol = detail::norm_tie_eps * std::max(1.0, d.max_abs());
    if (p12 <= p13 + tol && p13 <= p23 + tol) {
      chosen = k;
      break;
    }
  }
  Offset<3> b1 = e[perms[chosen][0]], b2 = e[perms[chosen][1]], b3 = e[perms[chosen][2]];
  if (d.inner(b1, b3) > 0) b1 = -b1;
  if (d.inner(b2, b3) > 0) b2 = -b2;
  if (d.inner(b1, b2) <= 0) return {b1, b2, b3, -(b1 + b2 + b3)};
  return {-b1, b2, b1 + b3, -(b2 + b3)};
}

}  // namespace adlbr
