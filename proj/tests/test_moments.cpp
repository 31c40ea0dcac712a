#include <filesystem>

#include "doctest.h"
#include "kaflab/moments.hpp"
#include "kaflab/reference.hpp"
#include "test_support.hpp"

using namespace kaflab;
using kaflab::testing::Exp1Geometry;
using kaflab::testing::mc_product_moment;
using kaflab::testing::expanded_two_point;
using kaflab::testing::rel_diff;

namespace {

SymMatrix exp1_cov() { return stationary_covariance(0.5, 0.5, 2); }

}  // namespace

TEST_SUITE("moments") {
  TEST_CASE("two-point moment equals the expanded autocorrelation formula") {
    const Exp1Geometry g;
    const SymMatrix r = second_moment(g.dictionary, g.kernel, g.input);
    for (Index l = 0; l < 25; ++l) {
      for (Index m = 0; m < 25; ++m) {
        const double expanded =
            expanded_two_point(g.dictionary.center(l), g.dictionary.center(m), 0.7,
                              g.input.r_u.matrix());
        CHECK(rel_diff(r(l, m), expanded) < 1e-10);
      }
    }
  }

  TEST_CASE("deterministic-input limit") {
    const GaussianKernel k(0.7);
    const InputModel tiny(SymMatrix(1e-12 * Matrix::Identity(2, 2)));
    std::mt19937_64 rng(3);
    for (Index order = 1; order <= 4; ++order) {
      const Matrix c = kaflab::testing::random_matrix(order, 2, rng);
      double expect = 1.0;
      for (Index i = 0; i < order; ++i) expect *= kappa(Vector::Zero(2), c.row(i).transpose(), k);
      CHECK(rel_diff(multi_point_moment(c, k, tiny), expect) < 1e-6);
    }
  }

  TEST_CASE("four-point moment against Monte Carlo") {
    const GaussianKernel k(0.7);
    const InputModel im(exp1_cov());
    std::mt19937_64 rng(21);
    const Matrix c = kaflab::testing::random_matrix(4, 2, rng);
    const double closed = multi_point_moment(c, k, im);
    const auto mc = mc_product_moment(c, 0.7, im.r_u.matrix(), 10'000'000, 77);
    CHECK(std::abs(mc.mean - closed) < 4.0 * mc.stderr_);
  }

  TEST_CASE("multi_point_moment argument checks") {
    const GaussianKernel k(0.7);
    const InputModel im(exp1_cov());
    CHECK_THROWS_AS(multi_point_moment(Matrix(0, 2), k, im), Error);
    CHECK_THROWS_AS(multi_point_moment(Matrix::Zero(2, 3), k, im), DimensionError);
    Matrix bad(2, 2);
    bad << 1, 2, 2, 1;
    CHECK_THROWS_AS(InputModel(SymMatrix(bad)), NotPositiveDefinite);
  }

  TEST_CASE("second moment of a centered single atom") {
    const double s2 = 0.3;
    const double sigma = 0.8;
    const InputModel im(SymMatrix(s2 * Matrix::Identity(2, 2)));
    const SymMatrix r = second_moment(Dictionary(Matrix::Zero(1, 2)), GaussianKernel(sigma), im);
    // |I + (2/sigma^2) s2 I|^{-1/2} with b = 0, c = 0
    CHECK(r(0, 0) == doctest::Approx(1.0 / (1.0 + 2.0 * s2 / (sigma * sigma))).epsilon(1e-14));
  }

  TEST_CASE("second moment is PD with dominant diagonal rows") {
    const Exp1Geometry g;
    const SymMatrix r = second_moment(g.dictionary, g.kernel, g.input);
    CHECK(sym_eig(r).values(0) > 0.0);
    CHECK(r.matrix().diagonal().minCoeff() >= r.matrix().minCoeff());
  }

  TEST_CASE("second moment spot checks against Monte Carlo") {
    const Exp1Geometry g;
    const SymMatrix r = second_moment(g.dictionary, g.kernel, g.input);
    const std::vector<std::pair<Index, Index>> pairs{{12, 12}, {0, 24}, {6, 7}, {3, 17}};
    std::uint64_t seed = 100;
    for (const auto& [l, m] : pairs) {
      Matrix c(2, 2);
      c.row(0) = g.dictionary.centers().row(l);
      c.row(1) = g.dictionary.centers().row(m);
      const auto mc = mc_product_moment(c, 0.7, g.input.r_u.matrix(), 200'000, seed++);
      CHECK(std::abs(mc.mean - r(l, m)) < 4.0 * mc.stderr_);
    }
  }

  TEST_CASE("fourth tensor structure") {
    const Exp1Geometry g;
    const Tensor4 s = fourth_tensor(g.dictionary, g.kernel, g.input);
    const Index r = s.dim();
    for (Index i = 0; i < r; i += 6) {
      Matrix c(4, 2);
      for (Index q = 0; q < 4; ++q) c.row(q) = g.dictionary.centers().row(i);
      CHECK(s(i, i, i, i) == doctest::Approx(multi_point_moment(c, g.kernel, g.input)));
    }
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<Index> pick(0, r - 1);
    for (int t = 0; t < 200; ++t) {
      std::array<Index, 4> idx{pick(rng), pick(rng), pick(rng), pick(rng)};
      const double v = s(idx[0], idx[1], idx[2], idx[3]);
      CHECK(s(idx[2], idx[3], idx[0], idx[1]) == v);
      std::sort(idx.begin(), idx.end());
      do {
        CHECK(s(idx[0], idx[1], idx[2], idx[3]) == v);
      } while (std::next_permutation(idx.begin(), idx.end()));
    }
  }

  TEST_CASE("fourth tensor matches the entry-by-entry reference") {
    std::mt19937_64 rng(31);
    const Dictionary d = kaflab::testing::random_dictionary(6, 2, rng);
    const GaussianKernel k(0.9);
    const InputModel im(exp1_cov());
    const Tensor4 fast = fourth_tensor(d, k, im);
    const Tensor4 ref = reference::fourth_tensor(d, k, im);
    for (std::size_t i = 0; i < fast.size(); ++i) {
      CHECK(rel_diff(fast.values()[i], ref.values()[i]) < 1e-12);
    }
  }

  TEST_CASE("fourth tensor entries against Monte Carlo") {
    const Exp1Geometry g;
    const Tensor4 s = fourth_tensor(g.dictionary, g.kernel, g.input);
    const std::vector<std::array<Index, 4>> picks{{12, 12, 12, 12}, {0, 6, 12, 18}, {7, 7, 13, 2}};
    std::uint64_t seed = 500;
    for (const auto& p : picks) {
      Matrix c(4, 2);
      for (Index q = 0; q < 4; ++q) c.row(q) = g.dictionary.centers().row(p[static_cast<std::size_t>(q)]);
      const auto mc = mc_product_moment(c, 0.7, g.input.r_u.matrix(), 1'000'000, seed++);
      CHECK(std::abs(mc.mean - s(p[0], p[1], p[2], p[3])) < 4.0 * mc.stderr_);
    }
  }

  TEST_CASE("cross statistics of the pure-noise system") {
    const Exp1Geometry g;
    const CrossStats cs = estimate_cross_stats({0.5, 0.5}, SystemKind::Null, 0.05, g.dictionary,
                                               g.kernel, 200'000, 3);
    for (Index l = 0; l < cs.p.size(); ++l) CHECK(std::abs(cs.p(l)) < 4.0 * cs.p_stderr(l));
    CHECK(std::abs(cs.d2 - 0.0025) < 4.0 * cs.d2_stderr);
    CHECK_THROWS_AS(estimate_cross_stats({0.5, 0.5}, SystemKind::Null, 0.05, g.dictionary,
                                         g.kernel, 100, 3),
                    Error);
  }

  TEST_CASE("cross statistics of a kernel-section target match the closed form") {
    const Exp1Geometry g;
    const Vector c1 = g.dictionary.center(0);
    const auto target = [&](const Vector& u) { return kappa(u, c1, g.kernel); };
    const CrossStats cs =
        estimate_cross_stats({0.5, 0.5}, target, g.dictionary, g.kernel, 400'000, 9);
    Matrix cc(2, 2);
    cc.row(0) = c1.transpose();
    cc.row(1) = c1.transpose();
    const double expect = multi_point_moment(cc, g.kernel, g.input);
    CHECK(std::abs(cs.p(0) - expect) < 4.0 * cs.p_stderr(0));
    CHECK(std::abs(cs.d2 - expect) < 4.0 * cs.d2_stderr);
  }

  TEST_CASE("cross statistics are deterministic and seed-stable") {
    const Exp1Geometry g;
    const CrossStats a = estimate_cross_stats({0.5, 0.5}, SystemKind::Polynomial, 0.05,
                                              g.dictionary, g.kernel, 200'000, 1, 4);
    const CrossStats a2 = estimate_cross_stats({0.5, 0.5}, SystemKind::Polynomial, 0.05,
                                               g.dictionary, g.kernel, 200'000, 1, 4);
    const CrossStats b = estimate_cross_stats({0.5, 0.5}, SystemKind::Polynomial, 0.05,
                                              g.dictionary, g.kernel, 200'000, 2, 4);
    CHECK(a.p == a2.p);
    CHECK(a.d2 == a2.d2);
    const double joint = std::sqrt(a.d2_stderr * a.d2_stderr + b.d2_stderr * b.d2_stderr);
    CHECK(std::abs(a.d2 - b.d2) < 4.0 * joint);
  }

  TEST_CASE("build_model with an identity Gram matrix") {
    Matrix c(3, 2);
    c << 0, 0, 1, 0, 0, 1;
    const Dictionary d(c);
    const GaussianKernel k(0.01);  // off-diagonal kernel values underflow to 0
    const InputModel im(exp1_cov());
    Vector p(3);
    p << 1e-3, 2e-3, -1e-3;
    const MomentModel m = build_model(d, k, im, p, 0.5);
    CHECK(m.gram.g.matrix() == Matrix::Identity(3, 3));
    CHECK((m.r_tilde.matrix() - m.r_kappa.matrix()).norm() < 1e-15);
    CHECK((m.p_tilde - p).norm() < 1e-15);
    for (std::size_t i = 0; i < m.s_tensor.size(); ++i) {
      CHECK(m.s_tilde.values()[i] == doctest::Approx(m.s_tensor.values()[i]));
    }
  }

  TEST_CASE("noise-floor J_min of the pure-noise system") {
    const Exp1Geometry g;
    const CrossStats cs = estimate_cross_stats({0.5, 0.5}, SystemKind::Null, 0.05, g.dictionary,
                                               g.kernel, 200'000, 4);
    const MomentModel m = build_model(g.dictionary, g.kernel, g.input, cs.p, cs.d2);
    CHECK(m.j_min <= m.d2);
    CHECK(m.j_min == doctest::Approx(0.0025).epsilon(0.05));
  }

  TEST_CASE("S~ and H agree with the explicit contraction order") {
    const Exp1Geometry g;
    const MomentModel m = build_model(g.dictionary, g.kernel, g.input, Vector::Zero(25), 1.0);
    const Matrix& w = m.gram.g_inv_sqrt.matrix();
    const Tensor4 h = reference::h_tensor(m.s_tensor, w);
    const Tensor4 st = reference::s_tilde_from_h(h, w);
    // |G^{-1/2}|_inf is about 1e2 here, so the four mode products lose
    // several digits against the largest S~ entry.
    double scale = 0.0;
    for (double v : st.values()) scale = std::max(scale, std::abs(v));
    double max_h = 0.0, max_s = 0.0;
    for (std::size_t i = 0; i < st.size(); ++i) {
      max_h = std::max(max_h, std::abs(h.values()[i] - m.h.values()[i]));
      max_s = std::max(max_s, std::abs(st.values()[i] - m.s_tilde.values()[i]));
    }
    CHECK(max_h < 1e-8 * scale);
    CHECK(max_s < 1e-8 * scale);
    // Symmetries inherited from S.
    const Index r = 25;
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<Index> pick(0, r - 1);
    for (int t = 0; t < 500; ++t) {
      const Index l = pick(rng), mm = pick(rng), p = pick(rng), q = pick(rng);
      const double v = m.s_tilde(l, mm, p, q);
      CHECK(std::abs(m.s_tilde(mm, l, q, p) - v) < 1e-8 * scale);
      CHECK(std::abs(m.s_tilde(p, q, l, mm) - v) < 1e-8 * scale);
      CHECK(std::abs(m.s_tilde(l, p, mm, q) - v) < 1e-8 * scale);
    }
    // h_block / s_tilde_block accessors
    CHECK(m.h_block(3, 4)(1, 2) == doctest::Approx(m.h(1, 2, 3, 4)));
    CHECK(m.s_tilde_block(3, 4)(1, 2) == doctest::Approx(m.s_tilde(3, 4, 1, 2)));
  }

  TEST_CASE("transformed autocorrelation matches sampled kappa~ kappa~^T") {
    const Exp1Geometry g;
    const MomentModel m = build_model(g.dictionary, g.kernel, g.input, Vector::Zero(25), 1.0);
    const Matrix& w = m.gram.g_inv_sqrt.matrix();
    const Matrix chol = g.input.r_u.matrix().llt().matrixL();
    std::mt19937_64 rng(44);
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::size_t n = 200'000;
    const std::vector<std::pair<Index, Index>> entries{{0, 0}, {12, 12}, {3, 9}, {24, 1}};
    std::vector<double> sum(entries.size(), 0.0), sum_sq(entries.size(), 0.0);
    Vector z(2);
    for (std::size_t i = 0; i < n; ++i) {
      z << normal(rng), normal(rng);
      const Vector kt = w * kernelized_input(g.dictionary, g.kernel, chol * z);
      for (std::size_t e = 0; e < entries.size(); ++e) {
        const double v = kt(entries[e].first) * kt(entries[e].second);
        sum[e] += v;
        sum_sq[e] += v * v;
      }
    }
    for (std::size_t e = 0; e < entries.size(); ++e) {
      const double mean = sum[e] / n;
      const double se = std::sqrt((sum_sq[e] / n - mean * mean) / (n - 1.0));
      CHECK(std::abs(mean - m.r_tilde(entries[e].first, entries[e].second)) < 4.0 * se);
    }
  }

  TEST_CASE("J_min is the MSE of the optimal fixed filter") {
    const Exp1Geometry g;
    const CrossStats cs = estimate_cross_stats({0.5, 0.5}, SystemKind::Polynomial, 0.05,
                                               g.dictionary, g.kernel, 2'000'000, 12);
    const MomentModel m = build_model(g.dictionary, g.kernel, g.input, cs.p, cs.d2);
    const Vector alpha = m.alpha_star();
    // Independent stream; batch means for the stderr of the mean of e^2.
    SignalSource src({0.5, 0.5}, SystemKind::Polynomial, 0.05, 991);
    src.discard(kBurnIn);
    const std::size_t batches = 200, per = 5'000;
    std::vector<double> means;
    Vector u(2);
    for (std::size_t b = 0; b < batches; ++b) {
      double acc = 0.0;
      for (std::size_t i = 0; i < per; ++i) {
        const double d = src.next(u);
        const double e = d - alpha.dot(kernelized_input(g.dictionary, g.kernel, u));
        acc += e * e;
      }
      means.push_back(acc / per);
    }
    double mean = 0.0;
    for (double v : means) mean += v;
    mean /= batches;
    double var = 0.0;
    for (double v : means) var += (v - mean) * (v - mean);
    const double se_mse = std::sqrt(var / (batches - 1.0) / batches);
    // The model side carries its own estimation error through p and d2.
    const double se_model = cs.d2_stderr + 2.0 * (m.gram.g_inv_sqrt.matrix() * cs.p_stderr).cwiseAbs().dot(m.alpha_star_tilde.cwiseAbs());
    CHECK(std::abs(mean - m.j_min) < 4.0 * std::sqrt(se_mse * se_mse + se_model * se_model));
  }

  TEST_CASE("cross-correlation length must match the dictionary") {
    const Exp1Geometry g;
    CHECK_THROWS_AS(build_model(g.dictionary, g.kernel, g.input, Vector::Zero(3), 1.0),
                    DimensionError);
  }

  TEST_CASE("moment model serialization round trip") {
    std::mt19937_64 rng(8);
    const Dictionary d = kaflab::testing::random_dictionary(5, 2, rng);
    const GaussianKernel k(0.8);
    const InputModel im(exp1_cov());
    const Vector p = Vector::LinSpaced(5, -0.01, 0.02);
    const MomentModel m = build_model(d, k, im, p, 0.3);
    const auto path = std::filesystem::temp_directory_path() / "kaflab_model_roundtrip.csv";
    write_model(m, path);
    const MomentModel back = read_model(path);
    CHECK(back.sigma == m.sigma);
    CHECK(back.d2 == m.d2);
    CHECK(back.j_min == m.j_min);
    CHECK(back.dictionary.centers() == m.dictionary.centers());
    CHECK(back.input.r_u.matrix() == m.input.r_u.matrix());
    CHECK(back.r_kappa.matrix() == m.r_kappa.matrix());
    CHECK(back.p == m.p);
    CHECK(back.r_tilde.matrix() == m.r_tilde.matrix());
    CHECK(back.p_tilde == m.p_tilde);
    CHECK(back.alpha_star_tilde == m.alpha_star_tilde);
    CHECK(back.gram.g_inv_sqrt.matrix() == m.gram.g_inv_sqrt.matrix());
    CHECK(back.s_tensor.values() == m.s_tensor.values());
    CHECK(back.h.values() == m.h.values());
    CHECK(back.s_tilde.values() == m.s_tilde.values());
    std::filesystem::remove(path);
  }
}
