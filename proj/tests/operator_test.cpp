#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <vector>

#include "adlbr/operator.hpp"
#include "oracles.hpp"

using namespace adlbr;
using Catch::Approx;

namespace {

constexpr double pi = 3.14159265358979323846;

TensorField2 random_field(Rng& rng, int n, double kmax, Boundary bc) {
  const Grid<2> g({n, n}, 1.0, bc);
  TensorField2 t(g);
  for (auto& m : t.tensors) m = testutil::random_spd2(rng, kmax);
  return t;
}

void check_structure(const SparseOperator<2>& a, bool nonneg_scheme) {
  const std::size_t n = a.rows();
  for (std::size_t i = 0; i < n; ++i) {
    double row_sum = 0, row_max = 0;
    for (std::size_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
      const int j = a.cols[k];
      const double v = a.vals[k];
      row_sum += v;
      row_max = std::max(row_max, std::abs(v));
      REQUIRE(a.entry(static_cast<std::size_t>(j), static_cast<int>(i)) == v);
      if (nonneg_scheme) {
        if (j == static_cast<int>(i))
          REQUIRE(v >= 0.0);
        else
          REQUIRE(v <= 0.0);
      }
    }
    REQUIRE(std::abs(row_sum) <= 1e-12 * std::max(row_max, 1e-300));
  }
}

}  // namespace

TEST_CASE("identity tensor assembles the classical Laplacians", "[operator]") {
  const Grid<2> g2({8, 8}, 1.0, Boundary::periodic);
  const SparseOperator<2> a2 = assemble(TensorField2(g2, SymMat2::identity()), Scheme::adlbr);
  const std::size_t c = g2.index({3, 4});
  CHECK(a2.entry(c, static_cast<int>(c)) == Approx(4.0));
  CHECK(a2.entry(c, static_cast<int>(g2.index({4, 4}))) == Approx(-1.0));
  CHECK(a2.entry(c, static_cast<int>(g2.index({3, 5}))) == Approx(-1.0));
  CHECK(a2.entry(c, static_cast<int>(g2.index({4, 5}))) == 0.0);

  const Grid<3> g3({5, 5, 5}, 1.0, Boundary::periodic);
  const SparseOperator<3> a3 = assemble(TensorField3(g3, SymMat3::identity()), Scheme::adlbr);
  const std::size_t c3 = g3.index({2, 2, 2});
  CHECK(a3.entry(c3, static_cast<int>(c3)) == Approx(6.0));
  CHECK(a3.entry(c3, static_cast<int>(g3.index({2, 2, 3}))) == Approx(-1.0));
}

TEST_CASE("assembled operators are symmetric PSD with zero row sums", "[operator]") {
  Rng rng(12);
  for (Boundary bc : {Boundary::periodic, Boundary::neumann_truncate}) {
    const TensorField2 t = random_field(rng, 12, 20.0, bc);
    for (Scheme sch : {Scheme::adlbr, Scheme::ann, Scheme::fd}) {
      const SparseOperator<2> a = assemble(t, sch);
      check_structure(a, sch != Scheme::fd);
      std::vector<double> u(a.rows()), au;
      for (int rep = 0; rep < 100; ++rep) {
        for (auto& x : u) x = rng.normal();
        a.apply(u, au);
        double quad = 0;
        for (std::size_t i = 0; i < u.size(); ++i) quad += u[i] * au[i];
        REQUIRE(quad >= -1e-10);
      }
    }
  }
}

TEST_CASE("assembly validates its inputs", "[operator]") {
  const Grid<3> g3({5, 5, 5}, 1.0, Boundary::periodic);
  CHECK_THROWS_AS(assemble(TensorField3(g3, SymMat3::identity()), Scheme::fd),
                  std::invalid_argument);
  CHECK_THROWS_AS(assemble(TensorField3(g3, SymMat3::identity()), Scheme::ann),
                  std::invalid_argument);
  const Grid<2> small({2, 2}, 1.0, Boundary::periodic);
  CHECK_THROWS_AS(assemble(TensorField2(small, SymMat2::identity()), Scheme::adlbr),
                  std::invalid_argument);
  const Grid<2> g2({4, 4}, 1.0, Boundary::periodic);
  CHECK_THROWS_AS(assemble(TensorField2(g2, SymMat2{}), Scheme::adlbr),
                  std::invalid_argument);
}

TEST_CASE("energy of a linear ramp approaches the continuum value", "[operator]") {
  const int n = 64;
  const Grid<2> g({n, n}, 1.0 / n, Boundary::neumann_truncate);
  ScalarField2 u(g);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) u.at({x, y}) = (x + 0.5) / n;
  const double e = energy(u, TensorField2(g, SymMat2::identity()));
  CHECK(e == Approx(1.0).epsilon(0.05));

  ScalarField2 c(g, 3.25);
  CHECK(energy(c, TensorField2(g, SymMat2::identity())) == 0.0);
}

TEST_CASE("energy equals the operator quadratic form", "[operator]") {
  Rng rng(34);
  for (Boundary bc : {Boundary::periodic, Boundary::neumann_truncate}) {
    const int n = 10;
    TensorField2 t = random_field(rng, n, 15.0, bc);
    t.grid.spacing = 0.37;
    const SparseOperator<2> a = assemble(t, Scheme::adlbr);
    for (int rep = 0; rep < 100; ++rep) {
      ScalarField2 u(t.grid);
      for (auto& x : u.values) x = rng.normal();
      std::vector<double> au;
      a.apply(u.values, au);
      double quad = 0;
      for (std::size_t i = 0; i < au.size(); ++i) quad += u.values[i] * au[i];
      quad *= std::pow(t.grid.spacing, 2);  // h^d u^T A u
      const double e = energy(u, t);
      REQUIRE(e == Approx(quad).epsilon(1e-10));
    }
  }
}

TEST_CASE("explicit step scales eigenvectors and conserves mass", "[operator]") {
  const int n = 8;
  const Grid<2> g({n, n}, 1.0, Boundary::periodic);
  const SparseOperator<2> a = assemble(TensorField2(g, SymMat2::identity()), Scheme::adlbr);

  ScalarField2 u(g);
  const int k1 = 2, k2 = 3;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x)
      u.at({x, y}) = std::cos(2.0 * pi * (k1 * x + k2 * y) / n);
  const double lam = 4.0 * std::pow(std::sin(pi * k1 / n), 2) +
                     4.0 * std::pow(std::sin(pi * k2 / n), 2);
  const double dt = 0.05;
  const ScalarField2 v = explicit_step(u, a, dt);
  for (std::size_t i = 0; i < u.values.size(); ++i)
    REQUIRE(v.values[i] == Approx((1.0 - dt * lam) * u.values[i]).margin(1e-12));

  Rng rng(56);
  ScalarField2 w(g);
  for (auto& x : w.values) x = rng.uniform(-1.0, 2.0);
  const ScalarField2 w1 = explicit_step(w, a, 0.1);
  double s0 = 0, s1 = 0;
  for (double x : w.values) s0 += x;
  for (double x : w1.values) s1 += x;
  CHECK(s1 == Approx(s0).epsilon(1e-12));
}

TEST_CASE("maximum principle for non-negative schemes", "[operator]") {
  Rng rng(78);
  for (Scheme sch : {Scheme::adlbr, Scheme::ann}) {
    const TensorField2 t = random_field(rng, 10, 25.0, Boundary::neumann_truncate);
    const SparseOperator<2> a = assemble(t, sch);
    const double dt = 1.0 / a.max_diagonal();
    ScalarField2 u(t.grid);
    for (auto& x : u.values) x = rng.uniform(-1.0, 1.0);
    double lo = 1e300, hi = -1e300;
    for (double x : u.values) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    for (int step = 0; step < 25; ++step) {
      u = explicit_step(u, a, dt);
      for (double x : u.values) {
        REQUIRE(x >= lo - 1e-12);
        REQUIRE(x <= hi + 1e-12);
      }
    }
  }
}

TEST_CASE("conjugate gradient solves the screened system", "[operator]") {
  const int n = 8;
  const Grid<2> g({n, n}, 1.0, Boundary::periodic);
  const SparseOperator<2> a = assemble(TensorField2(g, SymMat2::identity()), Scheme::adlbr);

  Rng rng(90);
  ScalarField2 v(g);
  for (auto& x : v.values) x = rng.normal();

  const ScalarField2 u0 = cg_solve(a, 0.0, v, 1e-12);
  for (std::size_t i = 0; i < v.values.size(); ++i)
    REQUIRE(u0.values[i] == Approx(v.values[i]).margin(1e-10));

  // eigenvector: u = v / (1 + lambda mu)
  ScalarField2 ev(g);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) ev.at({x, y}) = std::cos(2.0 * pi * (x + 2 * y) / n);
  const double mu_ev =
      4.0 * std::pow(std::sin(pi * 1.0 / n), 2) + 4.0 * std::pow(std::sin(pi * 2.0 / n), 2);
  const double lambda = 0.7;
  const ScalarField2 ue = cg_solve(a, lambda, ev, 1e-13);
  for (std::size_t i = 0; i < ev.values.size(); ++i)
    REQUIRE(ue.values[i] == Approx(ev.values[i] / (1.0 + lambda * mu_ev)).margin(1e-9));

  // residual contract on a rough system, with and without Jacobi
  Rng rng2(91);
  const TensorField2 t = random_field(rng2, 12, 40.0, Boundary::neumann_truncate);
  const SparseOperator<2> ar = assemble(t, Scheme::adlbr);
  ScalarField2 w(t.grid);
  for (auto& x : w.values) x = rng2.normal();
  for (bool jacobi : {false, true}) {
    const ScalarField2 sol = cg_solve(ar, 2.5, w, 1e-11, jacobi);
    std::vector<double> asol;
    ar.apply(sol.values, asol);
    double res = 0, rhs = 0;
    for (std::size_t i = 0; i < w.values.size(); ++i) {
      const double r = sol.values[i] + 2.5 * asol[i] - w.values[i];
      res += r * r;
      rhs += w.values[i] * w.values[i];
    }
    REQUIRE(std::sqrt(res) <= 1e-10 * std::sqrt(rhs));
  }
}

TEST_CASE("strong screening pulls the solution to the mean", "[operator]") {
  const int n = 8;
  const Grid<2> g({n, n}, 1.0, Boundary::neumann_truncate);
  const SparseOperator<2> a = assemble(TensorField2(g, SymMat2::identity()), Scheme::adlbr);
  Rng rng(44);
  ScalarField2 v(g);
  double mean = 0;
  for (auto& x : v.values) {
    x = rng.uniform(0.0, 1.0);
    mean += x;
  }
  mean /= static_cast<double>(v.values.size());
  const ScalarField2 u = cg_solve(a, 1e8, v, 1e-12);
  for (double x : u.values) REQUIRE(x == Approx(mean).margin(1e-4));
}

TEST_CASE("largest eigenvalue by power iteration", "[operator]") {
  const Grid<2> g({16, 16}, 1.0, Boundary::periodic);
  const SparseOperator<2> a = assemble(TensorField2(g, SymMat2::identity()), Scheme::adlbr);
  CHECK(eigen_max(a) == Approx(8.0).epsilon(1e-5));

  const Grid<2> g64({64, 64}, 1.0, Boundary::periodic);
  const SymMat2 d50 = testutil::test_tensor(std::sqrt(50.0));
  CHECK(eigen_max(assemble(TensorField2(g64, d50), Scheme::adlbr)) ==
        Approx(1.06).epsilon(0.03));
}

TEST_CASE("finite difference operator matches its analytic symbol", "[operator]") {
  // Constant-tensor periodic FD spectra are exactly the symbol values
  // 4a sin^2(t1/2) + 4c sin^2(t2/2) + 2b sin(t1) sin(t2) at grid frequencies.
  const SymMat2 d = testutil::test_tensor(std::sqrt(10.0));
  const double a = d(0, 0), b = d(0, 1), c = d(1, 1);
  const int n = 64;
  double grid_max = 0;
  for (int k1 = 0; k1 < n; ++k1)
    for (int k2 = 0; k2 < n; ++k2) {
      const double t1 = 2.0 * pi * k1 / n, t2 = 2.0 * pi * k2 / n;
      const double f = 4.0 * a * std::pow(std::sin(t1 / 2), 2) +
                       4.0 * c * std::pow(std::sin(t2 / 2), 2) +
                       2.0 * b * std::sin(t1) * std::sin(t2);
      grid_max = std::max(grid_max, f);
    }
  const Grid<2> g({n, n}, 1.0, Boundary::periodic);
  const SparseOperator<2> afd = assemble(TensorField2(g, d), Scheme::fd);
  CHECK(eigen_max(afd) == Approx(grid_max).epsilon(2e-5));
  CHECK(grid_max == Approx(4.0 * (a + c)).epsilon(1e-3));
}

TEST_CASE("smallest eigenvalues by dense solve", "[operator]") {
  const Grid<2> g({4, 4}, 0.25, Boundary::periodic);
  const SparseOperator<2> a = assemble(TensorField2(g, SymMat2::identity()), Scheme::adlbr);
  const auto ev = eigen_smallest(a, 7);
  // analytic spectrum 16 (4 sin^2(pi k1/4) + 4 sin^2(pi k2/4))
  const std::vector<double> want = {0.0, 32.0, 32.0, 32.0, 32.0, 64.0, 64.0};
  REQUIRE(ev.size() == want.size());
  for (std::size_t i = 0; i < want.size(); ++i)
    CHECK(ev[i] == Approx(want[i]).margin(1e-7 * 128));

  const Grid<2> big({70, 70}, 1.0, Boundary::periodic);
  const SparseOperator<2> abig =
      assemble(TensorField2(big, SymMat2::identity()), Scheme::adlbr);
  CHECK_THROWS_AS(eigen_smallest(abig, 3), std::invalid_argument);
}

TEST_CASE("second order consistency for smooth data", "[operator]") {
  SymMat2 d;
  d(0, 0) = 1.3;
  d(0, 1) = 0.4;
  d(1, 1) = 0.9;
  const double w1 = 4.0 * pi, w2 = 6.0 * pi;
  auto err = [&](int n) {
    const Grid<2> g({n, n}, 1.0 / n, Boundary::periodic);
    const SparseOperator<2> a = assemble(TensorField2(g, d), Scheme::adlbr);
    ScalarField2 u(g);
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        const double px = (x + 0.5) / n, py = (y + 0.5) / n;
        u.at({x, y}) = std::sin(w1 * px) * std::cos(w2 * py);
      }
    std::vector<double> au;
    a.apply(u.values, au);
    double emax = 0;
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        const double px = (x + 0.5) / n, py = (y + 0.5) / n;
        const double target = d(0, 0) * w1 * w1 * std::sin(w1 * px) * std::cos(w2 * py) +
                              d(1, 1) * w2 * w2 * std::sin(w1 * px) * std::cos(w2 * py) +
                              2.0 * d(0, 1) * w1 * w2 * std::cos(w1 * px) * std::sin(w2 * py);
        emax = std::max(emax, std::abs(au[g.index({x, y})] - target));
      }
    return emax;
  };
  const double ratio = err(32) / err(64);
  CHECK(ratio >= 3.5);
  CHECK(ratio <= 4.5);
}

TEST_CASE("matrix market export", "[operator]") {
  const Grid<2> g({3, 3}, 1.0, Boundary::neumann_truncate);
  const SparseOperator<2> a = assemble(TensorField2(g, SymMat2::identity()), Scheme::adlbr);
  std::ostringstream os;
  write_matrix_market(a, os);
  std::istringstream is(os.str());
  std::string header;
  std::getline(is, header);
  CHECK(header == "%%MatrixMarket matrix coordinate real general");
  std::size_t rows, cols, nnz;
  is >> rows >> cols >> nnz;
  CHECK(rows == 9);
  CHECK(cols == 9);
  double sum = 0;
  for (std::size_t k = 0; k < nnz; ++k) {
    std::size_t i, j;
    double v;
    is >> i >> j >> v;
    REQUIRE(i >= 1);
    REQUIRE(i <= 9);
    sum += v;
  }
  CHECK(sum == Approx(0.0).margin(1e-12));  // zero row sums overall
}

TEST_CASE("3D assembly structure and energy agreement", "[operator]") {
  Rng rng(135);
  const Grid<3> g({7, 7, 7}, 0.8, Boundary::neumann_truncate);
  TensorField3 t(g);
  for (auto& m : t.tensors) m = testutil::random_spd3(rng, 15.0);
  const SparseOperator<3> a = assemble(t, Scheme::adlbr);

  for (std::size_t i = 0; i < a.rows(); ++i) {
    double row_sum = 0, row_max = 0;
    for (std::size_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
      row_sum += a.vals[k];
      row_max = std::max(row_max, std::abs(a.vals[k]));
      REQUIRE(a.entry(static_cast<std::size_t>(a.cols[k]), static_cast<int>(i)) ==
              a.vals[k]);
      if (a.cols[k] == static_cast<int>(i))
        REQUIRE(a.vals[k] >= 0.0);
      else
        REQUIRE(a.vals[k] <= 0.0);
    }
    REQUIRE(std::abs(row_sum) <= 1e-12 * std::max(row_max, 1e-300));
  }

  for (int rep = 0; rep < 20; ++rep) {
    ScalarField3 u(g);
    for (auto& x : u.values) x = rng.normal();
    std::vector<double> au;
    a.apply(u.values, au);
    double quad = 0;
    for (std::size_t i = 0; i < au.size(); ++i) quad += u.values[i] * au[i];
    quad *= std::pow(g.spacing, 3);
    REQUIRE(energy(u, t) == Approx(quad).epsilon(1e-10));
  }

  // maximum principle under the safe step size
  const double dt = 1.0 / a.max_diagonal();
  ScalarField3 u(g);
  for (auto& x : u.values) x = rng.uniform(-1.0, 1.0);
  double lo = 1e300, hi = -1e300;
  for (double x : u.values) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  for (int step = 0; step < 10; ++step) {
    u = explicit_step(u, a, dt);
    for (double x : u.values) {
      REQUIRE(x >= lo - 1e-12);
      REQUIRE(x <= hi + 1e-12);
    }
  }
}

TEST_CASE("grid eigenvalue approaches the symbol supremum", "[operator]") {
  const SymMat2 d = testutil::test_tensor(std::sqrt(10.0));
  const Grid<2> g({64, 64}, 1.0, Boundary::periodic);
  const double lm = eigen_max(assemble(TensorField2(g, d), Scheme::adlbr));
  const double sup = symbol_max(adlbr_stencil_2d(d));
  CHECK(lm <= sup * (1.0 + 1e-6));
  CHECK(lm == Approx(sup).epsilon(0.03));
  CHECK(lm == Approx(2.06).epsilon(0.03));
}

TEST_CASE("assembly is bit-deterministic", "[operator]") {
  Rng rng(246);
  const TensorField2 t = random_field(rng, 9, 25.0, Boundary::periodic);
  const SparseOperator<2> a = assemble(t, Scheme::adlbr);
  const SparseOperator<2> b = assemble(t, Scheme::adlbr);
  REQUIRE(a.row_ptr == b.row_ptr);
  REQUIRE(a.cols == b.cols);
  REQUIRE(a.vals == b.vals);
}
