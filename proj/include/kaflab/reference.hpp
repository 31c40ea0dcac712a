#pragma once

// Serial reference implementations of the OpenMP kernels. They follow the
// defining formulas directly, without the symmetry reuse, slicing or run
// blocking of the parallel versions, and exist for tests and benchmarks.

#include "kaflab/moments.hpp"
#include "kaflab/sim.hpp"
#include "kaflab/tensor.hpp"

namespace kaflab::reference {

/// Every one of the r^4 entries evaluated independently.
Tensor4 fourth_tensor(const Dictionary& d, const GaussianKernel& k, const InputModel& im);

/// [H_{m,p}]_{i,j} = g_m^T S_{i,j} g_p, stored as h(i, j, m, p).
Tensor4 h_tensor(const Tensor4& s, const Matrix& g_inv_sqrt);

/// [S~_{l,m}]_{p,q} = g_l^T H_{m,p} g_q, with H stored as h(i, j, m, p).
Tensor4 s_tilde_from_h(const Tensor4& h, const Matrix& g_inv_sqrt);

/// [T~]_{l,m} = tr(S~_{l,m} C).
Matrix t_tilde(const Tensor4& s_tilde, const Matrix& c);

/// Sequential run loop, accumulated in run order.
LearningCurve mc_learning_curve(const McSetup& setup, int n_runs, std::size_t n_iters);

/// Single-mode contraction by explicit summation.
Tensor4 contract_mode(const Tensor4& t, int mode, const Matrix& w);

}  // namespace kaflab::reference
