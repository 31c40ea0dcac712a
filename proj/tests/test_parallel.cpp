#include <cstdlib>

#include "doctest.h"
#include "kaflab/reference.hpp"
#include "kaflab/tensor.hpp"
#include "test_support.hpp"

using namespace kaflab;

TEST_SUITE("parallel") {
  TEST_CASE("mode contraction matches explicit sums for every mode") {
    std::mt19937_64 rng(2);
    Tensor4 t(4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double& v : t.values()) v = u(rng);
    const Matrix w = kaflab::testing::random_matrix(4, 4, rng);
    for (int mode = 0; mode < 4; ++mode) {
      const Tensor4 fast = contract_mode(t, mode, w);
      const Tensor4 ref = reference::contract_mode(t, mode, w);
      for (std::size_t i = 0; i < t.size(); ++i) {
        CHECK(fast.values()[i] == doctest::Approx(ref.values()[i]).epsilon(1e-13));
      }
    }
    CHECK_THROWS_AS(contract_mode(t, 4, w), Error);
    CHECK_THROWS_AS(contract_mode(t, 0, Matrix::Zero(3, 3)), DimensionError);
  }

  TEST_CASE("tensor layout") {
    Tensor4 t(3);
    t(1, 2, 0, 1) = 5.0;
    CHECK(t.values()[1 + 3 * (2 + 3 * (0 + 3 * 1))] == 5.0);
    CHECK(t.as_matrix()(1 + 3 * 2, 0 + 3 * 1) == 5.0);
  }

  TEST_CASE("worker count honours KAFLAB_THREADS") {
    const int base = worker_count();
    CHECK(base >= 1);
    setenv("KAFLAB_THREADS", "1", 1);
    CHECK(worker_count() == 1);
    setenv("KAFLAB_THREADS", "junk", 1);
    CHECK(worker_count() == base);
    unsetenv("KAFLAB_THREADS");
  }
}
