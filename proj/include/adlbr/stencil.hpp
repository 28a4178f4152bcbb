#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "adlbr/lattice.hpp"
#include "adlbr/sym.hpp"

namespace adlbr {

template <int N>
struct StencilArm {
  Offset<N> offset;
  double weight = 0;  // gamma(offset) >= 0
};

/// Symmetric difference stencil: all signed offsets, stored as +/- pairs
/// with equal weights. Zero-weight arms are retained (the decomposition
/// identity still sees them) but excluded from radius and cardinality.
template <int N>
struct Stencil {
  std::vector<StencilArm<N>> arms;

  /// Number of +/- pairs with strictly positive weight.
  int active_pairs() const {
    int k = 0;
    for (const auto& a : arms)
      if (a.weight > 0) ++k;
    return k / 2;
  }
  /// Diagonal coefficient 2 sum_e gamma(e) of the assembled operator row
  /// at unit spacing (off-center entries are -2 gamma(e)).
  double center_coefficient() const {
    double s = 0;
    for (const auto& a : arms) s += a.weight;
    return 2.0 * s;
  }
};

using Stencil2 = Stencil<2>;
using Stencil3 = Stencil<3>;

namespace detail {

template <int N>
inline Offset<N> canonical_sign(const Offset<N>& e) {
  for (int i = 0; i < N; ++i) {
    if (e.c[i] > 0) return e;
    if (e.c[i] < 0) return -e;
  }
  return e;
}

// <u, D v> accumulated in extended precision: stencil arms grow with the
// anisotropy and the short-arm weight cancels at the |u||v| scale, so plain
// double costs ~kappa^2 eps of the decomposition identity.
template <int N>
inline double bilinear_xp(const SymMat<N>& d, const Vec<N>& u, const Vec<N>& v) {
  long double s = 0;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      s += static_cast<long double>(d(i, j)) * u.c[i] * v.c[j];
  return static_cast<double>(s);
}

// Roundoff can turn an algebraically zero scalar product into a tiny
// negative weight; clamp those, fail loudly on anything larger.
inline double non_negative_weight(double w, double scale) {
  if (w >= 0) return w + 0.0;  // also normalizes -0
  if (w > -1e-10 * scale) return 0.0;
  throw std::logic_error("stencil weight negative beyond roundoff");
}

// Deterministic arm order: pairs sorted by canonical representative,
// each emitted as +rep, -rep.
template <int N>
inline Stencil<N> make_stencil(std::vector<StencilArm<N>> pairs) {
  for (auto& p : pairs) p.offset = canonical_sign(p.offset);
  std::sort(pairs.begin(), pairs.end(),
            [](const StencilArm<N>& a, const StencilArm<N>& b) {
              return a.offset < b.offset;
            });
  Stencil<N> s;
  s.arms.reserve(2 * pairs.size());
  for (const auto& p : pairs) {
    s.arms.push_back(p);
    s.arms.push_back({-p.offset, p.weight});
  }
  return s;
}

}  // namespace detail

/// AD-LBR stencil: offsets from the obtuse superbase of the unit-determinant
/// metric det(D)^(1/2) D^-1, weights gamma(+-e_i) = -1/2 <perp(e_{i+1}), D perp(e_{i+2})>.
/// Satisfies sum_e gamma(e) e e^T = D exactly, with all weights >= 0.
inline Stencil2 adlbr_stencil_2d(const SymMat2& d) {
  require_spd(d);
  const Superbase2 sb = obtuse_superbase2(metric_of(d));
  std::vector<StencilArm<2>> pairs(3);
  for (int i = 0; i < 3; ++i) {
    const Vec<2> p1 = perp(sb[(i + 1) % 3].to_vec());
    const Vec<2> p2 = perp(sb[(i + 2) % 3].to_vec());
    pairs[i] = {sb[i],
                detail::non_negative_weight(-0.5 * detail::bilinear_xp(d, p1, p2), d.max_abs())};
  }
  return detail::make_stencil(std::move(pairs));
}

/// 3D AD-LBR / Selling stencil: offsets e_k x e_l over the pairs of a
/// D-obtuse superbase, weights -1/2 <e_i, D e_j> for the complementary pair.
inline Stencil3 adlbr_stencil_3d(const SymMat3& d) {
  require_spd(d);
  const Superbase3 sb = obtuse_superbase3(d);
  std::vector<StencilArm<3>> pairs;
  pairs.reserve(6);
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      int rest[2], r = 0;
      for (int k = 0; k < 4; ++k)
        if (k != i && k != j) rest[r++] = k;
      pairs.push_back(
          {cross(sb[rest[0]], sb[rest[1]]),
           detail::non_negative_weight(
               -0.5 * detail::bilinear_xp(d, sb[i].to_vec(), sb[j].to_vec()), d.max_abs())});
    }
  }
  return detail::make_stencil(std::move(pairs));
}

/// Axes-directed non-negative stencil. Diagonal tensors use the 4-point
/// stencil; otherwise arms (1,0), (0,1) and (p,q) with b p q >= 0,
/// |b|/c <= |p/q| <= a/|b| and max(|p|,|q|) minimal (ties: smaller |p|+|q|,
/// then p > 0). The search is capped at max(|p|,|q|) = 10^6; Remark-2 type
/// tensors can push q ~ kappa^2, and beyond the cap we fail loudly.
inline Stencil2 ann_stencil_2d(const SymMat2& d) {
  require_spd(d);
  const double a = d(0, 0), b = d(0, 1), c = d(1, 1);
  if (b == 0) {
    return detail::make_stencil<2>(
        {{Offset<2>{{1, 0}}, 0.5 * a}, {Offset<2>{{0, 1}}, 0.5 * c}});
  }
  const double ab = std::abs(b);
  auto admissible = [&](long long p, long long q) {
    // |b|/c <= p/q <= a/|b| by cross multiplication
    return static_cast<double>(p) * c >= static_cast<double>(q) * ab &&
           static_cast<double>(p) * ab <= static_cast<double>(q) * a;
  };
  // Admissible q at fixed p (and vice versa) form a contiguous interval, so
  // each boundary max(|p|,|q|) = m is checked in O(1): locate the interval's
  // lower end from the ratio bound, then probe a small safety window.
  auto first_admissible = [](double lo_estimate, long long hi,
                             auto&& is_ok) -> long long {
    const long long start =
        std::max(1ll, static_cast<long long>(std::floor(lo_estimate)) - 2);
    for (long long k = start; k <= std::min(hi, start + 5); ++k)
      if (is_ok(k)) return k;
    return -1;
  };
  long long bp = 0, bq = 0;
  constexpr long long search_cap = 1000000;
  for (long long m = 1; m <= search_cap && bp == 0; ++m) {
    const long long q1 =
        first_admissible(m * ab / a, m, [&](long long q) { return admissible(m, q); });
    const long long p1 =
        first_admissible(m * ab / c, m - 1, [&](long long p) { return admissible(p, m); });
    if (q1 > 0) bp = m, bq = q1;
    if (p1 > 0 && (bp == 0 || p1 + m < bp + bq)) bp = p1, bq = m;
  }
  if (bp == 0) throw std::runtime_error("A-NN stencil search exceeded bound 1e6");
  const int p = static_cast<int>(bp), q = static_cast<int>(b > 0 ? bq : -bq);
  const double scale = d.max_abs();
  const long double lb = b, lp = p, lq = q;
  return detail::make_stencil<2>(
      {{Offset<2>{{1, 0}},
        detail::non_negative_weight(static_cast<double>(0.5L * (a - lp / lq * lb)), scale)},
       {Offset<2>{{0, 1}},
        detail::non_negative_weight(static_cast<double>(0.5L * (c - lq / lp * lb)), scale)},
       {Offset<2>{{p, q}},
        detail::non_negative_weight(static_cast<double>(0.5L * (lb / (lp * lq))), scale)}});
}

/// Frobenius norm of sum_e gamma(e) e e^T - D.
template <int N>
inline double decomposition_residual(const Stencil<N>& s, const SymMat<N>& d) {
  SymMat<N> acc;
  for (const auto& arm : s.arms)
    acc = acc + SymMat<N>::outer(arm.offset.to_vec()) * arm.weight;
  return (acc - d).frobenius_norm();
}

/// Max Euclidean norm over strictly positive weight offsets.
template <int N>
inline double stencil_radius(const Stencil<N>& s) {
  double r = 0;
  bool any = false;
  for (const auto& arm : s.arms) {
    if (arm.weight > 0) {
      any = true;
      r = std::max(r, arm.offset.euclidean_norm());
    }
  }
  if (!any) throw std::invalid_argument("empty stencil");
  return r;
}

namespace detail {

template <int N>
inline double symbol_at(const Stencil<N>& s, const std::array<double, N>& theta) {
  double f = 0;
  for (const auto& arm : s.arms) {
    double phase = 0;
    for (int i = 0; i < N; ++i) phase += theta[i] * arm.offset.c[i];
    const double sn = std::sin(0.5 * phase);
    f += 4.0 * arm.weight * sn * sn;
  }
  return f;
}

}  // namespace detail

/// Supremum over theta in [0, 2pi)^d of the Fourier symbol
/// sum_e 4 gamma(e) sin^2(<theta, e>/2): the largest eigenvalue of the
/// constant-coefficient periodic operator in the fine-grid limit.
/// Dense sampling (512 per axis in 2D, 160 in 3D by default) followed by
/// coordinate-wise golden-section refinement; accurate well inside 0.5%.
template <int N>
inline double symbol_max(const Stencil<N>& s, int samples_per_axis = 0) {
  if (samples_per_axis <= 0) samples_per_axis = (N == 2) ? 512 : 160;
  const double two_pi = 2.0 * std::acos(-1.0);
  const double step = two_pi / samples_per_axis;

  std::array<double, N> best{};
  double best_f = -1.0;
  std::array<int, N> idx{};
  while (true) {
    std::array<double, N> theta;
    for (int i = 0; i < N; ++i) theta[i] = idx[i] * step;
    const double f = detail::symbol_at<N>(s, theta);
    if (f > best_f) {
      best_f = f;
      best = theta;
    }
    int carry = N - 1;
    while (carry >= 0 && ++idx[carry] == samples_per_axis) idx[carry--] = 0;
    if (carry < 0) break;
  }

  const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int round = 0; round < 4; ++round) {
    for (int axis = 0; axis < N; ++axis) {
      double lo = best[axis] - step, hi = best[axis] + step;
      double x1 = hi - golden * (hi - lo), x2 = lo + golden * (hi - lo);
      auto eval = [&](double x) {
        std::array<double, N> t = best;
        t[axis] = x;
        return detail::symbol_at<N>(s, t);
      };
      double f1 = eval(x1), f2 = eval(x2);
      for (int it = 0; it < 48; ++it) {
        if (f1 < f2) {
          lo = x1;
          x1 = x2;
          f1 = f2;
          x2 = lo + golden * (hi - lo);
          f2 = eval(x2);
        } else {
          hi = x2;
          x2 = x1;
          f2 = f1;
          x1 = hi - golden * (hi - lo);
          f1 = eval(x1);
        }
      }
      best[axis] = 0.5 * (lo + hi);
      best_f = std::max(best_f, detail::symbol_at<N>(s, best));
    }
  }
  return best_f;
}

}  // namespace adlbr
