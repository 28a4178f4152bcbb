#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "adlbr/lattice.hpp"
#include "oracles.hpp"

using namespace adlbr;
using Catch::Approx;

namespace {

bool same_pair(const Offset<2>& a, const Offset<2>& b) { return a == b || a == -b; }

template <int N, std::size_t K>
bool contains_pair(const std::array<Offset<N>, K>& family, const Offset<N>& v) {
  return std::any_of(family.begin(), family.end(),
                     [&](const Offset<N>& e) { return e == v || e == -v; });
}

}  // namespace

TEST_CASE("lagrange reduction keeps canonical bases", "[lattice]") {
  const Basis2 id = lagrange_reduce(SymMat2::identity());
  CHECK(id[0] == Offset<2>{{1, 0}});
  CHECK(id[1] == Offset<2>{{0, 1}});

  const Basis2 ax = lagrange_reduce(SymMat2::diagonal({1.0, 100.0}));
  CHECK(ax[0] == Offset<2>{{1, 0}});
  CHECK(ax[1] == Offset<2>{{0, 1}});
}

TEST_CASE("lagrange reduction of the rotated test metric", "[lattice]") {
  const SymMat2 m = metric_of(testutil::test_tensor(std::sqrt(10.0)));
  const Basis2 b = lagrange_reduce(m);
  CHECK(same_pair(b[0], Offset<2>{{1, 1}}));
  CHECK(m.quad(b[0]) == Approx(1.014).margin(1e-3));
  const auto brute = testutil::brute_minima2(m, 50);
  CHECK(std::sqrt(m.quad(b[0])) == Approx(brute[0]).epsilon(1e-12));
  CHECK(std::sqrt(m.quad(b[1])) == Approx(brute[1]).epsilon(1e-12));
}

TEST_CASE("lagrange reduction rejects non-SPD input", "[lattice]") {
  SymMat2 bad;
  bad(0, 0) = 1;
  bad(0, 1) = 2;
  bad(1, 1) = 1;
  CHECK_THROWS_AS(lagrange_reduce(bad), std::invalid_argument);
  CHECK_THROWS_AS(reduce3(SymMat3{}), std::invalid_argument);
}

TEST_CASE("reduced bases match exhaustive minima in 2D", "[lattice]") {
  Rng rng(101);
  for (int trial = 0; trial < 200; ++trial) {
    const SymMat2 m = testutil::random_spd2(rng, 50.0);
    const int bound = static_cast<int>(std::ceil(kappa(m))) + 2;
    const auto brute = testutil::brute_minima2(m, bound);
    const auto mine = minkowski_minima(m);
    REQUIRE(mine[0] == Approx(brute[0]).epsilon(1e-12));
    REQUIRE(mine[1] == Approx(brute[1]).epsilon(1e-12));
    REQUIRE(mine[0] <= mine[1]);
  }
}

TEST_CASE("reduced bases match exhaustive minima in 3D", "[lattice]") {
  Rng rng(202);
  for (int trial = 0; trial < 60; ++trial) {
    const SymMat3 m = testutil::random_spd3(rng, 20.0);
    const int bound = static_cast<int>(std::ceil(kappa(m))) + 2;
    const auto brute = testutil::brute_minima3(m, bound);
    const auto mine = minkowski_minima(m);
    for (int i = 0; i < 3; ++i) REQUIRE(mine[i] == Approx(brute[i]).epsilon(1e-12));
  }
}

TEST_CASE("diag form minima", "[lattice]") {
  const auto m2 = minkowski_minima(SymMat2::diagonal({4.0, 9.0}));
  CHECK(m2[0] == Approx(2.0));
  CHECK(m2[1] == Approx(3.0));
  const auto m3i = minkowski_minima(SymMat3::identity());
  CHECK(m3i[0] == Approx(1.0));
  CHECK(m3i[2] == Approx(1.0));
  const auto m3 = minkowski_minima(SymMat3::diagonal({1.0, 4.0, 9.0}));
  CHECK(m3[0] == Approx(1.0));
  CHECK(m3[1] == Approx(2.0));
  CHECK(m3[2] == Approx(3.0));
}

TEST_CASE("reduced-basis inequalities", "[lattice]") {
  // near-orthogonality 2|<ei, M ej>| <= |ei|_M^2 and the minima bounds
  // sqrt(lmin) <= lambda_i <= sqrt(lmax)
  Rng rng(303);
  for (int trial = 0; trial < 100; ++trial) {
    const SymMat2 m2 = testutil::random_spd2(rng, 80.0);
    const Basis2 b2 = lagrange_reduce(m2);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        if (i != j)
          CHECK(2.0 * std::abs(m2.inner(b2[i], b2[j])) <= m2.quad(b2[i]) * (1.0 + 1e-12));
    const auto e2 = eigen_sym(m2);
    for (double lam : minkowski_minima(m2)) {
      CHECK(lam >= std::sqrt(e2.values[1]) * (1.0 - 1e-12));
      CHECK(lam <= std::sqrt(e2.values[0]) * (1.0 + 1e-12));
    }

    const SymMat3 m3 = testutil::random_spd3(rng, 40.0);
    const Basis3 b3 = reduce3(m3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (i != j)
          CHECK(2.0 * std::abs(m3.inner(b3[i], b3[j])) <= m3.quad(b3[i]) * (1.0 + 1e-12));
    const auto e3 = eigen_sym(m3);
    for (double lam : minkowski_minima(m3)) {
      CHECK(lam >= std::sqrt(e3.values[2]) * (1.0 - 1e-12));
      CHECK(lam <= std::sqrt(e3.values[0]) * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("mu identity", "[lattice]") {
  CHECK(mu(SymMat2::identity()) == Approx(0.0).margin(1e-14));
  CHECK(mu(SymMat2::diagonal({0.3, 7.0})) == Approx(0.0).margin(1e-14));
  Rng rng(404);
  for (int trial = 0; trial < 200; ++trial) {
    const SymMat2 m = testutil::random_spd2(rng, 50.0);
    const auto lam = minkowski_minima(m);
    const double rhs =
        std::sqrt(std::max(0.0, lam[0] * lam[0] * lam[1] * lam[1] - m.det()));
    CHECK(mu(m) == Approx(rhs).margin(1e-10 * std::max(1.0, rhs)));
    CHECK(2.0 * mu(m) <= lam[0] * lam[0] * (1.0 + 1e-10));
  }
}

TEST_CASE("2D obtuse superbases", "[lattice]") {
  const Superbase2 sbi = obtuse_superbase2(SymMat2::identity());
  CHECK(contains_pair(sbi, Offset<2>{{1, 0}}));
  CHECK(contains_pair(sbi, Offset<2>{{0, 1}}));
  CHECK(contains_pair(sbi, Offset<2>{{1, 1}}));

  const SymMat2 m10 = metric_of(testutil::test_tensor(std::sqrt(10.0)));
  const Superbase2 sb10 = obtuse_superbase2(m10);
  CHECK(contains_pair(sb10, Offset<2>{{1, 1}}));
  CHECK(contains_pair(sb10, Offset<2>{{1, 0}}));
  CHECK(contains_pair(sb10, Offset<2>{{2, 1}}));

  Rng rng(505);
  for (int trial = 0; trial < 300; ++trial) {
    const SymMat2 m = testutil::random_spd2(rng, 60.0);
    const Superbase2 sb = obtuse_superbase2(m);
    CHECK((sb[0] + sb[1] + sb[2]).is_zero());
    CHECK(std::abs(det(sb[0], sb[1])) == 1);
    const double tol = 1e-12 * m.max_abs();
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j) CHECK(m.inner(sb[i], sb[j]) <= tol);
    // the short pair dominates its products with g
    CHECK(m.inner(sb[0], sb[2]) <= -0.5 * m.quad(sb[0]) + tol);
    CHECK(m.inner(sb[1], sb[2]) <= -0.5 * m.quad(sb[1]) + tol);
  }
}

TEST_CASE("sorted obtuse superbase is reduced", "[lattice]") {
  Rng rng(606);
  for (int trial = 0; trial < 100; ++trial) {
    const SymMat2 m = testutil::random_spd2(rng, 30.0);
    Superbase2 sb = obtuse_superbase2(m);
    std::sort(sb.begin(), sb.end(),
              [&](const Offset<2>& a, const Offset<2>& b) { return m.quad(a) < m.quad(b); });
    const int bound = static_cast<int>(std::ceil(kappa(m))) + 2;
    const auto brute = testutil::brute_minima2(m, bound);
    CHECK(std::sqrt(m.quad(sb[0])) == Approx(brute[0]).epsilon(1e-10));
    CHECK(std::sqrt(m.quad(sb[1])) == Approx(brute[1]).epsilon(1e-10));
  }
}

TEST_CASE("3D obtuse superbases", "[lattice]") {
  const Superbase3 sbi = obtuse_superbase3(SymMat3::identity());
  CHECK(contains_pair(sbi, Offset<3>{{1, 1, 1}}));

  const Superbase3 sbd = obtuse_superbase3(SymMat3::diagonal({1.0, 2.0, 3.0}));
  const SymMat3 d123 = SymMat3::diagonal({1.0, 2.0, 3.0});
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) CHECK(d123.inner(sbd[i], sbd[j]) <= 1e-12);
  // canonical superbase up to signed permutation: three axis vectors plus
  // the all-ones closer
  int axes = 0, closers = 0;
  for (const auto& e : sbd) {
    int ones = 0;
    for (int i = 0; i < 3; ++i) ones += std::abs(e.c[i]);
    if (ones == 1) ++axes;
    if (ones == 3) ++closers;
  }
  CHECK(axes == 3);
  CHECK(closers == 1);

  Rng rng(707);
  for (int trial = 0; trial < 1000; ++trial) {
    const SymMat3 d = testutil::random_spd3(rng, 100.0);
    const Superbase3 sb = obtuse_superbase3(d);
    CHECK((sb[0] + sb[1] + sb[2] + sb[3]).is_zero());
    CHECK(std::abs(det(sb[1], sb[2], sb[3])) == 1);
    const double tol = 1e-12 * d.frobenius_norm();
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) REQUIRE(d.inner(sb[i], sb[j]) <= tol);
  }
}

TEST_CASE("iteration count grows at most logarithmically", "[lattice]") {
  Rng rng(808);
  for (int trial = 0; trial < 2000; ++trial) {
    const double k = std::exp(rng.uniform(0.0, std::log(1e6)));
    const SymMat2 m =
        testutil::rotated_diag2(1.0, 1.0 / (k * k), rng.uniform(0.0, std::acos(-1.0)));
    int iters = 0;
    lagrange_reduce(m, &iters);
    CHECK(iters <= 2.0 * (1.0 + std::log(k)));
  }
}
