#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "adlbr/sym.hpp"

namespace adlbr {

enum class Boundary { periodic, neumann_truncate };

/// Cartesian grid metadata. Linear index runs x fastest (row-major images:
/// index = y*nx + x; volumes: (z*ny + y)*nx + x).
template <int N>
struct Grid {
  std::array<int, N> extents{};
  double spacing = 1.0;
  Boundary bc = Boundary::neumann_truncate;

  Grid() = default;
  Grid(std::array<int, N> ext, double h, Boundary b) : extents(ext), spacing(h), bc(b) {
    for (int n : extents)
      if (n < 1) throw std::invalid_argument("grid extent < 1");
    if (!(spacing > 0)) throw std::invalid_argument("grid spacing <= 0");
  }

  std::size_t cells() const {
    std::size_t n = 1;
    for (int e : extents) n *= static_cast<std::size_t>(e);
    return n;
  }
  std::size_t index(const std::array<int, N>& x) const {
    std::size_t idx = 0;
    for (int i = N - 1; i >= 0; --i) idx = idx * extents[i] + x[i];
    return idx;
  }
  std::array<int, N> coords(std::size_t idx) const {
    std::array<int, N> x{};
    for (int i = 0; i < N; ++i) {
      x[i] = static_cast<int>(idx % extents[i]);
      idx /= extents[i];
    }
    return x;
  }
  bool contains(const std::array<int, N>& x) const {
    for (int i = 0; i < N; ++i)
      if (x[i] < 0 || x[i] >= extents[i]) return false;
    return true;
  }
  std::array<int, N> wrap(std::array<int, N> x) const {
    for (int i = 0; i < N; ++i) {
      x[i] %= extents[i];
      if (x[i] < 0) x[i] += extents[i];
    }
    return x;
  }
  /// Duplicate-edge reflection (half-sample symmetric), folds any index.
  std::array<int, N> reflect(std::array<int, N> x) const {
    for (int i = 0; i < N; ++i) {
      int k = x[i];
      const int n = extents[i];
      while (k < 0 || k >= n) k = (k < 0) ? -1 - k : 2 * n - 1 - k;
      x[i] = k;
    }
    return x;
  }

  bool operator==(const Grid&) const = default;
};

template <int N>
struct ScalarField {
  Grid<N> grid;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(const Grid<N>& g, double fill = 0.0)
      : grid(g), values(g.cells(), fill) {}

  double& at(const std::array<int, N>& x) { return values[grid.index(x)]; }
  double at(const std::array<int, N>& x) const { return values[grid.index(x)]; }
};

template <int N>
struct TensorField {
  Grid<N> grid;
  std::vector<SymMat<N>> tensors;

  TensorField() = default;
  explicit TensorField(const Grid<N>& g) : grid(g), tensors(g.cells()) {}
  TensorField(const Grid<N>& g, const SymMat<N>& constant)
      : grid(g), tensors(g.cells(), constant) {}

  SymMat<N>& at(const std::array<int, N>& x) { return tensors[grid.index(x)]; }
  const SymMat<N>& at(const std::array<int, N>& x) const {
    return tensors[grid.index(x)];
  }
};

using ScalarField2 = ScalarField<2>;
using ScalarField3 = ScalarField<3>;
using TensorField2 = TensorField<2>;
using TensorField3 = TensorField<3>;

}  // namespace adlbr
