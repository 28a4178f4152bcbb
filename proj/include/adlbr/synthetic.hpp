#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

#include "adlbr/grid.hpp"
#include "adlbr/operator.hpp"
#include "adlbr/rng.hpp"

namespace adlbr {

/// Analytic restoration benchmark: a stripe image transported by the
/// diffeomorphism f(x,y) = (x, y + alpha cos(2 pi x)), with the matching
/// transported diffusion tensor [[1, s],[s, s^2 + kappa^-2]],
/// s = 2 pi alpha sin(2 pi x). The exact solution of the screened elliptic
/// problem is known in closed form.
struct SyntheticCase {
  double kappa = 2.0;
  double alpha_diffeo = 1.0 / 3.0;
  double lambda = 1e-3;
  int n = 100;

  void validate() const {
    if (!(kappa >= 1)) throw std::invalid_argument("kappa < 1");
    if (!(lambda > 0)) throw std::invalid_argument("lambda <= 0");
    if (n < 8) throw std::invalid_argument("n < 8");
  }
};

struct ErrorNorms {
  double l2_rel = 0;
  double h1_rel = 0;
};

namespace detail {

constexpr double two_pi = 6.283185307179586476925286766559;

// 1D profile of the screened problem -lambda kappa^-2 u'' + u = 1_{y<1/2}
// on the line: exponential layer of width sqrt(lambda)/kappa around 1/2.
inline double stripe_profile(double y, double kappa, double lambda) {
  const double ell = std::sqrt(lambda) / kappa;
  if (y <= 0.5) return 1.0 - 0.5 * std::exp((y - 0.5) / ell);
  return 0.5 * std::exp(-(y - 0.5) / ell);
}

}  // namespace detail

/// Noisy data v = v0 of and transported tensor field, sampled at cell
/// centers (i+1/2)/n so the discontinuity stays off grid lines;
/// reflecting (Neumann-truncated) boundary.
inline std::pair<ScalarField2, TensorField2> make_inputs(const SyntheticCase& c) {
  c.validate();
  const Grid<2> g({c.n, c.n}, 1.0 / c.n, Boundary::neumann_truncate);
  ScalarField2 v(g);
  TensorField2 t(g);
  for (int iy = 0; iy < c.n; ++iy) {
    const double y = (iy + 0.5) / c.n;
    for (int ix = 0; ix < c.n; ++ix) {
      const double x = (ix + 0.5) / c.n;
      const double fy = y + c.alpha_diffeo * std::cos(detail::two_pi * x);
      const std::size_t i = g.index({ix, iy});
      v.values[i] = fy < 0.5 ? 1.0 : 0.0;
      const double s = detail::two_pi * c.alpha_diffeo * std::sin(detail::two_pi * x);
      SymMat2 d;
      d(0, 0) = 1.0;
      d(0, 1) = s;
      d(1, 1) = s * s + 1.0 / (c.kappa * c.kappa);
      t.tensors[i] = d;
    }
  }
  return {std::move(v), std::move(t)};
}

/// Exact solution u = u0 of sampled at cell centers.
inline ScalarField2 reference_solution(const SyntheticCase& c) {
  c.validate();
  const Grid<2> g({c.n, c.n}, 1.0 / c.n, Boundary::neumann_truncate);
  ScalarField2 u(g);
  for (int iy = 0; iy < c.n; ++iy) {
    const double y = (iy + 0.5) / c.n;
    for (int ix = 0; ix < c.n; ++ix) {
      const double x = (ix + 0.5) / c.n;
      const double fy = y + c.alpha_diffeo * std::cos(detail::two_pi * x);
      u.values[g.index({ix, iy})] = detail::stripe_profile(fy, c.kappa, c.lambda);
    }
  }
  return u;
}

/// Relative L2 error over cells, and relative H1 seminorm using forward
/// differences over interior pairs.
inline ErrorNorms error_norms(const ScalarField2& num, const ScalarField2& ref) {
  if (!(num.grid == ref.grid)) throw std::invalid_argument("error_norms: grid mismatch");
  const auto& g = num.grid;
  const int nx = g.extents[0], ny = g.extents[1];
  double diff2 = 0, ref2 = 0;
  for (std::size_t i = 0; i < num.values.size(); ++i) {
    const double d = num.values[i] - ref.values[i];
    diff2 += d * d;
    ref2 += ref.values[i] * ref.values[i];
  }
  double hdiff2 = 0, href2 = 0;
  auto fwd = [&](const ScalarField2& f, int x, int y, int axis) {
    const std::size_t i = g.index({x, y});
    const std::size_t j = g.index({axis == 0 ? x + 1 : x, axis == 1 ? y + 1 : y});
    return f.values[j] - f.values[i];
  };
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x < nx; ++x)
      for (int axis = 0; axis < 2; ++axis) {
        if ((axis == 0 && x + 1 >= nx) || (axis == 1 && y + 1 >= ny)) continue;
        const double dn = fwd(num, x, y, axis) - fwd(ref, x, y, axis);
        const double dr = fwd(ref, x, y, axis);
        hdiff2 += dn * dn;
        href2 += dr * dr;
      }
  return {std::sqrt(diff2 / ref2), std::sqrt(hdiff2 / href2)};
}

/// Assemble, solve (I + lambda A) u = v by CG (tol 1e-10) and compare with
/// the analytic reference.
inline ErrorNorms run_benchmark(const SyntheticCase& c, Scheme scheme) {
  auto [v, t] = make_inputs(c);
  const SparseOperator<2> a = assemble(t, scheme);
  const ScalarField2 u = cg_solve(a, c.lambda, v, 1e-10);
  return error_norms(u, reference_solution(c));
}

/// Radially varying 3D phantom cos(2 (r/R)^3), r measured from the cube
/// center, R = 1/2, plus seeded Gaussian noise. Pixel-unit spacing.
inline ScalarField3 radial_phantom(int n, double noise_sd, std::uint64_t seed) {
  if (n < 3) throw std::invalid_argument("radial_phantom: n < 3");
  const Grid<3> g({n, n, n}, 1.0, Boundary::neumann_truncate);
  ScalarField3 u(g);
  Rng rng(seed);
  for (int z = 0; z < n; ++z)
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        const double cx = (x + 0.5) / n - 0.5;
        const double cy = (y + 0.5) / n - 0.5;
        const double cz = (z + 0.5) / n - 0.5;
        const double r = std::sqrt(cx * cx + cy * cy + cz * cz);
        const double t = 2.0 * std::pow(r / 0.5, 3.0);
        u.values[g.index({x, y, z})] = std::cos(t) + noise_sd * rng.normal();
      }
  return u;
}

}  // namespace adlbr
