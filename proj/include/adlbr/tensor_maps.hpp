#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "adlbr/grid.hpp"
#include "adlbr/sym.hpp"

namespace adlbr {

/// Structure tensor / nonlinear diffusion parameters: pre-smoothing scale
/// sigma and integration scale rho in grid units, contrast C > 0,
/// diffusivity floor alpha in (0,1).
struct StructureParams {
  double sigma = 0.5;
  double rho = 4.0;
  double contrast = 1e-5;
  double alpha = 1e-2;

  void validate() const {
    if (sigma < 0 || rho < 0) throw std::invalid_argument("sigma/rho < 0");
    if (!(contrast > 0)) throw std::invalid_argument("contrast <= 0");
    if (!(alpha > 0 && alpha < 1)) throw std::invalid_argument("alpha outside (0,1)");
  }
};

namespace detail {

// Truncated sampled Gaussian, radius ceil(3s), renormalized to sum 1.
inline std::vector<double> gaussian_kernel(double s) {
  const int radius = static_cast<int>(std::ceil(3.0 * s));
  std::vector<double> k(2 * radius + 1);
  double sum = 0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = std::exp(-0.5 * (i * i) / (s * s));
    k[i + radius] = w;
    sum += w;
  }
  for (double& w : k) w /= sum;
  return k;
}

template <int N>
inline void blur_axis(ScalarField<N>& u, int axis, const std::vector<double>& kernel) {
  const Grid<N>& g = u.grid;
  const int radius = static_cast<int>(kernel.size() / 2);
  const int n_axis = g.extents[axis];

  // reflected index table over the virtual range [-radius, n_axis + radius)
  std::vector<std::size_t> fold(n_axis + 2 * radius);
  for (int k = -radius; k < n_axis + radius; ++k) {
    int q = k;
    while (q < 0 || q >= n_axis) q = q < 0 ? -1 - q : 2 * n_axis - 1 - q;
    fold[k + radius] = static_cast<std::size_t>(q);
  }

  std::size_t stride = 1;
  for (int i = 0; i < axis; ++i) stride *= g.extents[i];
  const std::size_t block = stride * n_axis;
  const std::size_t n = g.cells();
  std::vector<double> out(n);
  for (std::size_t b = 0; b < n; b += block) {
    for (std::size_t off = 0; off < stride; ++off) {
      const double* in_line = u.values.data() + b + off;
      double* out_line = out.data() + b + off;
      for (int x = 0; x < n_axis; ++x) {
        double s = 0;
        for (int t = 0; t <= 2 * radius; ++t)
          s += kernel[t] * in_line[stride * fold[x + t]];
        out_line[stride * x] = s;
      }
    }
  }
  u.values.swap(out);
}

}  // namespace detail

/// Separable Gaussian convolution at standard deviation s (grid units),
/// reflecting boundary; s = 0 is the identity.
template <int N>
inline ScalarField<N> gaussian_blur(const ScalarField<N>& u, double s) {
  if (s < 0) throw std::invalid_argument("gaussian_blur: s < 0");
  if (s == 0) return u;
  ScalarField<N> out = u;
  const auto kernel = detail::gaussian_kernel(s);
  for (int axis = 0; axis < N; ++axis) detail::blur_axis(out, axis, kernel);
  return out;
}

namespace detail {

// Central difference along one axis, reflecting boundary.
template <int N>
inline ScalarField<N> central_gradient(const ScalarField<N>& u, int axis) {
  const Grid<N>& g = u.grid;
  ScalarField<N> out(g);
  const double inv2h = 1.0 / (2.0 * g.spacing);
  const std::size_t n = g.cells();
  for (std::size_t i = 0; i < n; ++i) {
    auto xp = g.coords(i), xm = xp;
    xp[axis] += 1;
    xm[axis] -= 1;
    out.values[i] =
        (u.values[g.index(g.reflect(xp))] - u.values[g.index(g.reflect(xm))]) * inv2h;
  }
  return out;
}

}  // namespace detail

/// Structure tensor J_rho = K_rho * (grad u_sigma grad u_sigma^T); symmetric
/// PSD per cell.
template <int N>
inline TensorField<N> structure_tensor(const ScalarField<N>& u, const StructureParams& p) {
  p.validate();
  const ScalarField<N> us = gaussian_blur(u, p.sigma);
  std::array<ScalarField<N>, N> grad;
  for (int axis = 0; axis < N; ++axis) grad[axis] = detail::central_gradient(us, axis);

  TensorField<N> j(u.grid);
  const std::size_t n = u.grid.cells();
  for (int a = 0; a < N; ++a) {
    for (int b = a; b < N; ++b) {
      ScalarField<N> comp(u.grid);
      for (std::size_t i = 0; i < n; ++i)
        comp.values[i] = grad[a].values[i] * grad[b].values[i];
      comp = gaussian_blur(comp, p.rho);
      for (std::size_t i = 0; i < n; ++i) j.tensors[i](a, b) = comp.values[i];
    }
  }
  return j;
}

namespace detail {

template <int N>
inline EigenSym<N> checked_eigen(const SymMat<N>& j) {
  const EigenSym<N> e = eigen_sym(j);
  const double scale = std::max(j.trace(), 1e-300);
  if (e.values[N - 1] < -1e-10 * scale)
    throw std::invalid_argument("structure tensor not PSD");
  return e;
}

// exp(-C / x^2) with the analytic limit 0 as x -> 0.
inline double coherence_gain(double contrast, double diff2) {
  if (diff2 < 1e-30) return 0.0;
  return std::exp(-contrast / diff2);
}

}  // namespace detail

/// Coherence-enhancing diffusion tensor: eigenvectors of J, eigenvalues
/// lambda_1 = alpha and lambda_k = alpha + (1-alpha) exp(-C/(mu_1-mu_k)^2)
/// for k >= 2 (mu sorted descending). kappa(D) <= 1/sqrt(alpha).
template <int N>
inline TensorField<N> ced_tensor(const TensorField<N>& j, const StructureParams& p) {
  p.validate();
  TensorField<N> d(j.grid);
  const std::size_t n = j.grid.cells();
  for (std::size_t i = 0; i < n; ++i) {
    EigenSym<N> e = detail::checked_eigen(j.tensors[i]);
    const double mu1 = e.values[0];
    e.values[0] = p.alpha;
    for (int k = 1; k < N; ++k) {
      const double diff = mu1 - e.values[k];
      e.values[k] = p.alpha + (1.0 - p.alpha) * detail::coherence_gain(p.contrast, diff * diff);
    }
    d.tensors[i] = recompose(e);
  }
  return d;
}

/// Edge-enhancing diffusion tensor (3D): lambda_k = 1 - exp(-C/mu_k^2) for
/// k = 1, 2 and lambda_3 = 1 (mu -> 0 gives lambda = 1).
inline TensorField<3> eed_tensor(const TensorField<3>& j, const StructureParams& p) {
  p.validate();
  TensorField<3> d(j.grid);
  const std::size_t n = j.grid.cells();
  for (std::size_t i = 0; i < n; ++i) {
    EigenSym<3> e = detail::checked_eigen(j.tensors[i]);
    for (int k = 0; k < 2; ++k) {
      const double mu2 = e.values[k] * e.values[k];
      e.values[k] = 1.0 - detail::coherence_gain(p.contrast, mu2);
    }
    e.values[2] = 1.0;
    d.tensors[i] = recompose(e);
  }
  return d;
}

}  // namespace adlbr
