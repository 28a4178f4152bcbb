// Writes small input files for the CLI tests into the working directory.

#include <cmath>

#include "adlbr/imageio.hpp"
#include "adlbr/rng.hpp"

using namespace adlbr;

int main() {
  const int n = 32;
  const Grid<2> g({n, n}, 1.0, Boundary::neumann_truncate);
  ScalarField2 u(g);
  Rng rng(7);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const double v =
          0.5 + 0.3 * std::sin(2.0 * 3.14159265 * (x + 2 * y) / n) + 0.05 * rng.normal();
      u.at({x, y}) = std::min(1.0, std::max(0.0, v));
    }
  write_pgm(u, "fixture.pgm");

  TensorField2 t(g);
  for (auto& m : t.tensors) {
    m(0, 0) = 1.0;
    m(0, 1) = 0.2;
    m(1, 1) = 0.5;
  }
  write_volume(t, "fixture_tensor.vol");

  // horizontal stripes with a flat vertical band cut out of the middle
  const int m = 64;
  const Grid<2> gs({m, m}, 1.0, Boundary::neumann_truncate);
  ScalarField2 stripes(gs), gap(gs);
  for (int y = 0; y < m; ++y)
    for (int x = 0; x < m; ++x) {
      const double v = 0.5 + 0.45 * std::sin(2.0 * 3.14159265358979 * y / 8.0);
      stripes.at({x, y}) = v;
      gap.at({x, y}) = (x >= 28 && x < 36) ? 0.5 : v;
    }
  write_pgm(stripes, "lines_clean.pgm");
  write_pgm(gap, "lines_gap.pgm");
  return 0;
}
