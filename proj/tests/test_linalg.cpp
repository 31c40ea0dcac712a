#include "doctest.h"
#include "kaflab/linalg.hpp"
#include "test_support.hpp"

using namespace kaflab;
using kaflab::testing::random_matrix;
using kaflab::testing::random_spd;
using kaflab::testing::random_symmetric;

TEST_SUITE("linalg") {
  TEST_CASE("SymMatrix rejects asymmetric and non-square input") {
    Matrix a(2, 2);
    a << 1, 2, 3, 4;
    CHECK_THROWS_AS(SymMatrix{a}, DimensionError);
    CHECK_THROWS_AS(SymMatrix{Matrix(2, 3)}, DimensionError);
    Matrix b(2, 2);
    b << 1, 2, 2, 4;
    const SymMatrix s(b);
    CHECK(s(0, 1) == s(1, 0));
  }

  TEST_CASE("sym_eig on identity and diagonal") {
    const EigDecomposition e = sym_eig(SymMatrix::identity(3));
    CHECK(e.values.isApprox(Vector::Ones(3)));
    CHECK((e.vectors.transpose() * e.vectors - Matrix::Identity(3, 3)).norm() < 1e-12);

    Vector d(2);
    d << 5, 2;
    const EigDecomposition e2 = sym_eig(SymMatrix::diagonal(d));
    CHECK(e2.values(0) == doctest::Approx(2.0));
    CHECK(e2.values(1) == doctest::Approx(5.0));
  }

  TEST_CASE("sym_eig reconstruction and orthonormality on random matrices") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
      const SymMatrix a = random_symmetric(6, rng);
      const EigDecomposition e = sym_eig(a);
      const Matrix recon = e.vectors * e.values.asDiagonal() * e.vectors.transpose();
      CHECK((recon - a.matrix()).norm() / a.matrix().norm() < 1e-10);
      CHECK((e.vectors.transpose() * e.vectors - Matrix::Identity(6, 6)).norm() < 1e-10);
      for (Index i = 1; i < 6; ++i) CHECK(e.values(i - 1) <= e.values(i));
    }
  }

  TEST_CASE("pd_sqrt on identity and diagonal") {
    const PdSqrt id = pd_sqrt(SymMatrix::identity(4));
    CHECK(id.sqrt.matrix().isApprox(Matrix::Identity(4, 4)));
    CHECK(id.inv_sqrt.matrix().isApprox(Matrix::Identity(4, 4)));

    Vector d(2);
    d << 4, 9;
    const PdSqrt r = pd_sqrt(SymMatrix::diagonal(d));
    CHECK(r.sqrt(0, 0) == doctest::Approx(2.0));
    CHECK(r.sqrt(1, 1) == doctest::Approx(3.0));
    CHECK(r.inv_sqrt(0, 0) == doctest::Approx(0.5));
    CHECK(r.inv_sqrt(1, 1) == doctest::Approx(1.0 / 3.0));
    CHECK(std::abs(r.sqrt(0, 1)) < 1e-15);
  }

  TEST_CASE("pd_sqrt round trips on random SPD matrices") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
      const SymMatrix a = random_spd(5, rng);
      const PdSqrt r = pd_sqrt(a);
      const Matrix& s = r.sqrt.matrix();
      CHECK((s * s - a.matrix()).norm() / a.matrix().norm() < 1e-10);
      CHECK((r.inv_sqrt.matrix() * s - Matrix::Identity(5, 5)).norm() < 1e-10);
      CHECK((s - s.transpose()).cwiseAbs().maxCoeff() == 0.0);
      CHECK(sym_eig(r.sqrt).values(0) > 0.0);
    }
  }

  TEST_CASE("pd_sqrt reports the offending eigenvalue") {
    Vector d(3);
    d << 1.0, 0.0, 2.0;
    try {
      pd_sqrt(SymMatrix::diagonal(d));
      FAIL("expected NotPositiveDefinite");
    } catch (const NotPositiveDefinite& e) {
      CHECK(e.eigenvalue() == doctest::Approx(0.0));
    }
    d << 1.0, 1e-14, 2.0;  // below the 1e-12 relative floor
    CHECK_THROWS_AS(pd_sqrt(SymMatrix::diagonal(d)), NotPositiveDefinite);
    d << 1.0, -0.5, 2.0;
    CHECK_THROWS_AS(pd_sqrt(SymMatrix::diagonal(d)), NotPositiveDefinite);
  }

  TEST_CASE("kron identities and mixed product") {
    CHECK(kron(Matrix::Identity(2, 2), Matrix::Identity(3, 3)).isApprox(Matrix::Identity(6, 6)));
    std::mt19937_64 rng(3);
    const Matrix b = random_matrix(3, 2, rng);
    Matrix two(1, 1);
    two << 2.0;
    CHECK(kron(two, b).isApprox(2.0 * b));

    const Matrix k = kron(random_matrix(2, 3, rng), random_matrix(4, 5, rng));
    CHECK(k.rows() == 8);
    CHECK(k.cols() == 15);

    for (int trial = 0; trial < 20; ++trial) {
      const Matrix a = random_matrix(2, 2, rng), bb = random_matrix(2, 2, rng);
      const Matrix c = random_matrix(2, 2, rng), d = random_matrix(2, 2, rng);
      const Matrix lhs = kron(a, bb) * kron(c, d);
      const Matrix rhs = kron(a * c, bb * d);
      CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
    }
  }

  TEST_CASE("spectral_radius") {
    Vector d(2);
    d << 0.5, -0.9;
    CHECK(spectral_radius(Matrix(d.asDiagonal())) == doctest::Approx(0.9));
    CHECK(spectral_radius(Matrix(Matrix::Identity(5, 5))) == doctest::Approx(1.0));
    Matrix rot(2, 2);
    rot << 0, -2, 2, 0;  // eigenvalues +-2i
    CHECK(spectral_radius(rot) == doctest::Approx(2.0));
    CHECK_THROWS_AS(spectral_radius(Matrix(2, 3)), DimensionError);

    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 20; ++trial) {
      const Matrix a = random_matrix(6, 6, rng);
      const double row_sum_norm = a.cwiseAbs().rowwise().sum().maxCoeff();
      CHECK(spectral_radius(a) <= row_sum_norm + 1e-12);
      const SymMatrix s = random_symmetric(6, rng);
      const EigDecomposition e = sym_eig(s);
      CHECK(spectral_radius(s) == doctest::Approx(e.values.cwiseAbs().maxCoeff()));
      CHECK(spectral_radius(s.matrix()) == doctest::Approx(spectral_radius(s)));
    }
  }

  TEST_CASE("vec_lex stacks columns") {
    Matrix c(2, 2);
    c << 1, 3, 3, 2;
    Vector expect(4);
    expect << 1, 3, 3, 2;
    CHECK(vec_lex(SymMatrix(c)) == expect);
    Vector id(4);
    id << 1, 0, 0, 1;
    CHECK(vec_lex(SymMatrix::identity(2)) == id);

    Matrix g(2, 2);
    g << 1, 2, 3, 4;
    Vector gv(4);
    gv << 1, 3, 2, 4;
    CHECK(vec_lex(g) == gv);
    CHECK(unvec_lex_general(gv, 2) == g);
    CHECK_THROWS_AS(unvec_lex(gv, 3), DimensionError);
  }

  TEST_CASE("vec_lex round trip is exact") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 10; ++trial) {
      const SymMatrix c = random_symmetric(7, rng);
      CHECK(unvec_lex(vec_lex(c), 7).matrix() == c.matrix());
    }
  }
}
