#include "kaflab/reference.hpp"

#include <array>

namespace kaflab::reference {

Tensor4 fourth_tensor(const Dictionary& d, const GaussianKernel& k, const InputModel& im) {
  const Index r = d.size();
  Tensor4 s(r);
  Matrix pts(4, d.input_dim());
  for (Index t = 0; t < r; ++t) {
    for (Index c = 0; c < r; ++c) {
      for (Index b = 0; b < r; ++b) {
        for (Index a = 0; a < r; ++a) {
          pts.row(0) = d.centers().row(a);
          pts.row(1) = d.centers().row(b);
          pts.row(2) = d.centers().row(c);
          pts.row(3) = d.centers().row(t);
          s(a, b, c, t) = multi_point_moment(pts, k, im);
        }
      }
    }
  }
  return s;
}

Tensor4 h_tensor(const Tensor4& s, const Matrix& w) {
  const Index r = s.dim();
  Tensor4 h(r);
  for (Index m = 0; m < r; ++m) {
    for (Index p = 0; p < r; ++p) {
      for (Index i = 0; i < r; ++i) {
        for (Index j = 0; j < r; ++j) {
          double acc = 0.0;
          for (Index a = 0; a < r; ++a) {
            for (Index b = 0; b < r; ++b) acc += w(a, m) * s(i, j, a, b) * w(b, p);
          }
          h(i, j, m, p) = acc;
        }
      }
    }
  }
  return h;
}

Tensor4 s_tilde_from_h(const Tensor4& h, const Matrix& w) {
  const Index r = h.dim();
  Tensor4 out(r);
  for (Index l = 0; l < r; ++l) {
    for (Index m = 0; m < r; ++m) {
      for (Index p = 0; p < r; ++p) {
        for (Index q = 0; q < r; ++q) {
          double acc = 0.0;
          for (Index i = 0; i < r; ++i) {
            for (Index j = 0; j < r; ++j) acc += w(i, l) * h(i, j, m, p) * w(j, q);
          }
          out(l, m, p, q) = acc;
        }
      }
    }
  }
  return out;
}

Matrix t_tilde(const Tensor4& s_tilde, const Matrix& c) {
  const Index r = s_tilde.dim();
  Matrix t(r, r);
  for (Index l = 0; l < r; ++l) {
    for (Index m = 0; m < r; ++m) {
      double tr = 0.0;
      for (Index p = 0; p < r; ++p) {
        for (Index q = 0; q < r; ++q) tr += s_tilde(l, m, p, q) * c(q, p);
      }
      t(l, m) = tr;
    }
  }
  return t;
}

LearningCurve mc_learning_curve(const McSetup& setup, int n_runs, std::size_t n_iters) {
  if (n_runs < 1) throw Error("mc_learning_curve: n_runs must be >= 1");
  LearningCurve curve;
  curve.n_runs = n_runs;
  curve.mse.assign(n_iters, 0.0);
  for (int run = 0; run < n_runs; ++run) {
    const std::vector<double> e2 = mc_single_run(setup, n_iters, static_cast<std::uint64_t>(run));
    for (std::size_t n = 0; n < n_iters; ++n) curve.mse[n] += e2[n];
  }
  for (double& v : curve.mse) v /= n_runs;
  return curve;
}

Tensor4 contract_mode(const Tensor4& t, int mode, const Matrix& w) {
  const Index r = t.dim();
  Tensor4 out(r);
  std::array<Index, 4> idx{};
  for (idx[3] = 0; idx[3] < r; ++idx[3]) {
    for (idx[2] = 0; idx[2] < r; ++idx[2]) {
      for (idx[1] = 0; idx[1] < r; ++idx[1]) {
        for (idx[0] = 0; idx[0] < r; ++idx[0]) {
          std::array<Index, 4> src = idx;
          double acc = 0.0;
          for (Index b = 0; b < r; ++b) {
            src[static_cast<std::size_t>(mode)] = b;
            acc += w(b, idx[static_cast<std::size_t>(mode)]) * t(src[0], src[1], src[2], src[3]);
          }
          out(idx[0], idx[1], idx[2], idx[3]) = acc;
        }
      }
    }
  }
  return out;
}

}  // namespace kaflab::reference
