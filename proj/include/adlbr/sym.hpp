#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>

namespace adlbr {

/// Small fixed-size real vector, d = 2 or 3.
template <int N>
struct Vec {
  std::array<double, N> c{};

  double& operator[](int i) { return c[i]; }
  double operator[](int i) const { return c[i]; }

  Vec operator+(const Vec& o) const {
    Vec r;
    for (int i = 0; i < N; ++i) r.c[i] = c[i] + o.c[i];
    return r;
  }
  Vec operator-(const Vec& o) const {
    Vec r;
    for (int i = 0; i < N; ++i) r.c[i] = c[i] - o.c[i];
    return r;
  }
  Vec operator-() const {
    Vec r;
    for (int i = 0; i < N; ++i) r.c[i] = -c[i];
    return r;
  }
  Vec operator*(double s) const {
    Vec r;
    for (int i = 0; i < N; ++i) r.c[i] = c[i] * s;
    return r;
  }
};

template <int N>
inline double dot(const Vec<N>& a, const Vec<N>& b) {
  double s = 0;
  for (int i = 0; i < N; ++i) s += a.c[i] * b.c[i];
  return s;
}

template <int N>
inline double norm(const Vec<N>& a) {
  return std::sqrt(dot(a, a));
}

inline Vec<2> perp(const Vec<2>& u) { return {{-u.c[1], u.c[0]}}; }

inline Vec<3> cross(const Vec<3>& a, const Vec<3>& b) {
  return {{a.c[1] * b.c[2] - a.c[2] * b.c[1],
           a.c[2] * b.c[0] - a.c[0] * b.c[2],
           a.c[0] * b.c[1] - a.c[1] * b.c[0]}};
}

/// Lattice vector: integer coordinates. Coordinates stay well below 2^31
/// for reduced bases, but A-NN stencil arms can reach 10^6, so products
/// are taken in 64-bit.
template <int N>
struct Offset {
  std::array<int, N> c{};

  int& operator[](int i) { return c[i]; }
  int operator[](int i) const { return c[i]; }

  bool operator==(const Offset&) const = default;
  auto operator<=>(const Offset&) const = default;

  Offset operator-() const {
    Offset r;
    for (int i = 0; i < N; ++i) r.c[i] = -c[i];
    return r;
  }
  Offset operator+(const Offset& o) const {
    Offset r;
    for (int i = 0; i < N; ++i) r.c[i] = c[i] + o.c[i];
    return r;
  }
  Offset operator-(const Offset& o) const {
    Offset r;
    for (int i = 0; i < N; ++i) r.c[i] = c[i] - o.c[i];
    return r;
  }
  Offset operator*(int s) const {
    Offset r;
    for (int i = 0; i < N; ++i) r.c[i] = c[i] * s;
    return r;
  }

  Vec<N> to_vec() const {
    Vec<N> r;
    for (int i = 0; i < N; ++i) r.c[i] = static_cast<double>(c[i]);
    return r;
  }
  double euclidean_norm() const { return norm(to_vec()); }
  bool is_zero() const {
    for (int i = 0; i < N; ++i)
      if (c[i] != 0) return false;
    return true;
  }
};

inline std::int64_t det(const Offset<2>& a, const Offset<2>& b) {
  return static_cast<std::int64_t>(a.c[0]) * b.c[1] -
         static_cast<std::int64_t>(a.c[1]) * b.c[0];
}

inline Offset<3> cross(const Offset<3>& a, const Offset<3>& b) {
  return {{a.c[1] * b.c[2] - a.c[2] * b.c[1],
           a.c[2] * b.c[0] - a.c[0] * b.c[2],
           a.c[0] * b.c[1] - a.c[1] * b.c[0]}};
}

inline std::int64_t det(const Offset<3>& a, const Offset<3>& b, const Offset<3>& c) {
  const Offset<3> ab = cross(a, b);
  return static_cast<std::int64_t>(ab.c[0]) * c.c[0] +
         static_cast<std::int64_t>(ab.c[1]) * c.c[1] +
         static_cast<std::int64_t>(ab.c[2]) * c.c[2];
}

/// Symmetric d x d matrix, upper triangle stored row-major:
/// 2D (m00,m01,m11); 3D (m00,m01,m02,m11,m12,m22).
template <int N>
class SymMat {
 public:
  static constexpr int packed_size = N * (N + 1) / 2;
  std::array<double, packed_size> a{};

  SymMat() = default;

  static SymMat identity() {
    SymMat m;
    for (int i = 0; i < N; ++i) m(i, i) = 1.0;
    return m;
  }
  static SymMat diagonal(const std::array<double, N>& d) {
    SymMat m;
    for (int i = 0; i < N; ++i) m(i, i) = d[i];
    return m;
  }
  /// Rank-one matrix v v^T.
  static SymMat outer(const Vec<N>& v) {
    SymMat m;
    for (int i = 0; i < N; ++i)
      for (int j = i; j < N; ++j) m(i, j) = v.c[i] * v.c[j];
    return m;
  }

  static constexpr int index(int i, int j) {
    if (i > j) std::swap(i, j);
    return i * N - i * (i - 1) / 2 + (j - i);
  }
  double& operator()(int i, int j) { return a[index(i, j)]; }
  double operator()(int i, int j) const { return a[index(i, j)]; }

  SymMat operator+(const SymMat& o) const {
    SymMat r;
    for (int k = 0; k < packed_size; ++k) r.a[k] = a[k] + o.a[k];
    return r;
  }
  SymMat operator-(const SymMat& o) const {
    SymMat r;
    for (int k = 0; k < packed_size; ++k) r.a[k] = a[k] - o.a[k];
    return r;
  }
  SymMat operator*(double s) const {
    SymMat r;
    for (int k = 0; k < packed_size; ++k) r.a[k] = a[k] * s;
    return r;
  }

  Vec<N> apply(const Vec<N>& v) const {
    Vec<N> r;
    for (int i = 0; i < N; ++i) {
      double s = 0;
      for (int j = 0; j < N; ++j) s += (*this)(i, j) * v.c[j];
      r.c[i] = s;
    }
    return r;
  }
  /// <u, M v>
  double inner(const Vec<N>& u, const Vec<N>& v) const { return dot(u, apply(v)); }
  double inner(const Offset<N>& u, const Offset<N>& v) const {
    return inner(u.to_vec(), v.to_vec());
  }
  /// <v, M v>
  double quad(const Vec<N>& v) const { return inner(v, v); }
  double quad(const Offset<N>&v) const { return inner(v, v); }

  double trace() const {
    double s = 0;
    for (int i = 0; i < N; ++i) s += (*this)(i, i);
    return s;
  }
  double det() const {
    if constexpr (N == 2) {
      return a[0] * a[2] - a[1] * a[1];
    } else {
      return a[0] * (a[3] * a[5] - a[4] * a[4]) - a[1] * (a[1] * a[5] - a[4] * a[2]) +
             a[2] * (a[1] * a[4] - a[3] * a[2]);
    }
  }
  SymMat inverse() const {
    const double d = det();
    SymMat r;
    if constexpr (N == 2) {
      r.a = {a[2] / d, -a[1] / d, a[0] / d};
    } else {
      r(0, 0) = (a[3] * a[5] - a[4] * a[4]) / d;
      r(0, 1) = (a[2] * a[4] - a[1] * a[5]) / d;
      r(0, 2) = (a[1] * a[4] - a[2] * a[3]) / d;
      r(1, 1) = (a[0] * a[5] - a[2] * a[2]) / d;
      r(1, 2) = (a[1] * a[2] - a[0] * a[4]) / d;
      r(2, 2) = (a[0] * a[3] - a[1] * a[1]) / d;
    }
    return r;
  }
  double frobenius_norm() const {
    double s = 0;
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) s += (*this)(i, j) * (*this)(i, j);
    return std::sqrt(s);
  }
  double max_abs() const {
    double s = 0;
    for (double x : a) s = std::max(s, std::abs(x));
    return s;
  }

  /// Positive definiteness via leading principal minors, relative tolerance 1e-12.
  bool is_spd() const {
    const double scale = max_abs();
    if (!(scale > 0)) return false;
    constexpr double eps = 1e-12;
    if (!(a[0] > eps * scale)) return false;
    if constexpr (N == 2) {
      return det() > eps * scale * scale;
    } else {
      const double m2 = a[0] * a[3] - a[1] * a[1];
      if (!(m2 > eps * scale * scale)) return false;
      return det() > eps * scale * scale * scale;
    }
  }
};

using SymMat2 = SymMat<2>;
using SymMat3 = SymMat<3>;

template <int N>
inline void require_spd(const SymMat<N>& m) {
  if (!m.is_spd()) throw std::invalid_argument("not SPD");
}

template <int N>
struct EigenSym {
  std::array<double, N> values{};   // descending
  std::array<Vec<N>, N> vectors{};  // orthonormal, vectors[i] pairs with values[i]
};

/// Closed form for 2x2.
inline EigenSym<2> eigen_sym(const SymMat<2>& m) {
  EigenSym<2> r;
  const double a = m(0, 0), b = m(0, 1), c = m(1, 1);
  const double t = 0.5 * std::atan2(2.0 * b, a - c);
  const double cs = std::cos(t), sn = std::sin(t);
  const double l1 = a * cs * cs + 2.0 * b * cs * sn + c * sn * sn;
  const double l2 = a * sn * sn - 2.0 * b * cs * sn + c * cs * cs;
  if (l1 >= l2) {
    r.values = {l1, l2};
    r.vectors = {Vec<2>{{cs, sn}}, Vec<2>{{-sn, cs}}};
  } else {
    r.values = {l2, l1};
    r.vectors = {Vec<2>{{-sn, cs}}, Vec<2>{{cs, sn}}};
  }
  return r;
}

/// Cyclic Jacobi for 3x3, off-diagonal driven below 1e-12 * scale.
inline EigenSym<3> eigen_sym(const SymMat<3>& m) {
  double A[3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) A[i][j] = m(i, j);
  double V[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  const double scale = std::max(m.max_abs(), 1e-300);
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = std::abs(A[0][1]) + std::abs(A[0][2]) + std::abs(A[1][2]);
    if (off <= 1e-13 * scale) break;
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        if (std::abs(A[p][q]) <= 1e-300) continue;
        const double theta = (A[q][q] - A[p][p]) / (2.0 * A[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double cs = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * cs;
        for (int k = 0; k < 3; ++k) {
          const double akp = A[k][p], akq = A[k][q];
          A[k][p] = cs * akp - sn * akq;
          A[k][q] = sn * akp + cs * akq;
        }
        for (int k = 0; k < 3; ++k) {
          const double apk = A[p][k], aqk = A[q][k];
          A[p][k] = cs * apk - sn * aqk;
          A[q][k] = sn * apk + cs * aqk;
        }
        for (int k = 0; k < 3; ++k) {
          const double vkp = V[k][p], vkq = V[k][q];
          V[k][p] = cs * vkp - sn * vkq;
          V[k][q] = sn * vkp + cs * vkq;
        }
      }
    }
  }
  std::array<int, 3> ord = {0, 1, 2};
  for (int i = 0; i < 2; ++i)
    for (int j = i + 1; j < 3; ++j)
      if (A[ord[j]][ord[j]] > A[ord[i]][ord[i]]) std::swap(ord[i], ord[j]);
  EigenSym<3> r;
  for (int i = 0; i < 3; ++i) {
    r.values[i] = A[ord[i]][ord[i]];
    for (int k = 0; k < 3; ++k) r.vectors[i].c[k] = V[k][ord[i]];
  }
  return r;
}

/// Recompose sum_i values[i] * v_i v_i^T.
template <int N>
inline SymMat<N> recompose(const EigenSym<N>& e) {
  SymMat<N> m;
  for (int i = 0; i < N; ++i) m = m + SymMat<N>::outer(e.vectors[i]) * e.values[i];
  return m;
}

/// Anisotropy ratio sqrt(|M| |M^-1|) = sqrt(lmax/lmin).
template <int N>
inline double kappa(const SymMat<N>& m) {
  require_spd(m);
  const auto e = eigen_sym(m);
  return std::sqrt(e.values[0] / e.values[N - 1]);
}

/// Riemannian metric det(D)^(1/d) * D^-1, normalized to unit determinant.
template <int N>
inline SymMat<N> metric_of(const SymMat<N>& d) {
  require_spd(d);
  return d.inverse() * std::pow(d.det(), 1.0 / N);
}

}  // namespace adlbr
