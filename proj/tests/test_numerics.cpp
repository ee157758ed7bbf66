#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "sysid/numerics.hpp"

using namespace sysid;

TEST_CASE("spectral_norm: pinned cases") {
  CHECK(spectral_norm(Matrix::Identity(3, 3)) == doctest::Approx(1.0).epsilon(1e-12));

  Matrix nilpotent(2, 2);
  nilpotent << 0, 1, 0, 0;
  CHECK(spectral_norm(nilpotent) == doctest::Approx(1.0).epsilon(1e-12));

  Matrix row(1, 2);
  row << 3, 4;
  CHECK(spectral_norm(row) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("spectral_norm: rejects empty and non-finite input") {
  CHECK_THROWS_AS(spectral_norm(Matrix(0, 0)), ShapeError);
  CHECK_THROWS_AS(spectral_norm(Matrix(3, 0)), ShapeError);
  Matrix bad = Matrix::Zero(2, 2);
  bad(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(spectral_norm(bad), ShapeError);
}

TEST_CASE("min_eig_sym: pinned cases") {
  Matrix d(2, 2);
  d << 2, 0, 0, 3;
  CHECK(min_eig_sym(d) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(min_eig_sym(Matrix::Identity(4, 4)) == doctest::Approx(1.0).epsilon(1e-12));

  Matrix m(2, 2);
  m << 2, 1, 1, 2;  // characteristic roots 1 and 3
  CHECK(min_eig_sym(m) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("min_eig_sym: rejects asymmetry and non-square input") {
  Matrix m(2, 2);
  m << 2, 1, 1 + 1e-3, 2;
  CHECK_THROWS_AS(min_eig_sym(m), ShapeError);
  CHECK_THROWS_AS(min_eig_sym(Matrix::Zero(2, 3)), ShapeError);
}

TEST_CASE("solve_spd: pinned cases") {
  Matrix rhs(2, 1);
  rhs << 5, 7;
  CHECK((solve_spd(Matrix::Identity(2, 2), rhs) - rhs).cwiseAbs().maxCoeff() < 1e-14);

  Matrix g = Matrix::Zero(2, 2);
  g(0, 0) = 2;
  g(1, 1) = 4;
  Matrix rhs2(2, 1);
  rhs2 << 2, 8;
  Matrix expect(2, 1);
  expect << 1, 2;
  CHECK((solve_spd(g, rhs2) - expect).cwiseAbs().maxCoeff() < 1e-12);

  Matrix g3(2, 2);
  g3 << 2, 1, 1, 2;
  Matrix rhs3(2, 1);
  rhs3 << 3, 3;
  Matrix ones = Matrix::Ones(2, 1);
  CHECK((solve_spd(g3, rhs3) - ones).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("solve_spd: singular and indefinite inputs raise the Gram error") {
  Matrix singular(2, 2);
  singular << 1, 1, 1, 1;
  Matrix rhs(2, 1);
  rhs << 1, 1;
  CHECK_THROWS_AS(solve_spd(singular, rhs), SingularGramError);

  Matrix indefinite = Matrix::Zero(2, 2);
  indefinite(0, 0) = 1;
  indefinite(1, 1) = -1;
  CHECK_THROWS_AS(solve_spd(indefinite, rhs), SingularGramError);

  try {
    solve_spd(singular, rhs);
    FAIL("expected SingularGramError");
  } catch (const SingularGramError& e) {
    CHECK(e.min_eig() < 1e-10);
    CHECK(e.columns() == 2);
  }
}

TEST_CASE("spectral_norm is absolutely homogeneous") {
  std::mt19937_64 engine(101);
  std::uniform_real_distribution<double> unif(-3.0, 3.0);
  for (int trial = 0; trial < 25; ++trial) {
    const Matrix m = oracle::random_matrix(4, 6, engine);
    const double c = unif(engine);
    const double lhs = spectral_norm((c * m).eval());
    const double rhs = std::abs(c) * spectral_norm(m);
    CHECK(std::abs(lhs - rhs) <= 1e-9 * std::max(1.0, rhs));
  }
}

TEST_CASE("min_eig_sym shifts by alpha under M + alpha I") {
  std::mt19937_64 engine(202);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  for (int trial = 0; trial < 25; ++trial) {
    const Matrix a = oracle::random_matrix(5, 5, engine);
    const Matrix sym = 0.5 * (a + a.transpose());
    const double alpha = unif(engine);
    const double shifted = min_eig_sym((sym + alpha * Matrix::Identity(5, 5)).eval());
    CHECK(std::abs(shifted - (min_eig_sym(sym) + alpha)) <= 1e-9);
  }
}

TEST_CASE("solve_spd multiply-back recovers the right-hand side") {
  std::mt19937_64 engine(303);
  for (const Index size : {2, 7, 23, 50}) {
    const Matrix a = oracle::random_matrix(size, size, engine);
    const Matrix g = (a * a.transpose() + 0.05 * Matrix::Identity(size, size)).eval();
    const Matrix sym = 0.5 * (g + g.transpose());
    const Matrix rhs = oracle::random_matrix(size, 3, engine);
    const Matrix sol = solve_spd(sym, rhs);
    CHECK((sym * sol - rhs).norm() <= 1e-8 * rhs.norm());
  }
}

TEST_CASE("spectral_norm agrees with the power-iteration oracle") {
  std::mt19937_64 engine(404);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix m = oracle::random_matrix(5, 5, engine);
    const double reference = oracle::power_iteration_sigma_max(m, 1000 + trial);
    CHECK(std::abs(spectral_norm(m) - reference) <= 1e-8 * std::max(1.0, reference));
  }
}
