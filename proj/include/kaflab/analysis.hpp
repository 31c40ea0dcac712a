#pragma once

#include <cstdint>
#include <vector>

#include "kaflab/moments.hpp"
#include "kaflab/sim.hpp"

namespace kaflab {

/// 2 / lambda_max(R~): the mean recursion contracts for 0 < eta below this.
double mean_stability_bound(const MomentModel& m);

/// E[v~_{n+1}] = (I - eta R~) E[v~_n]; returns v0 followed by n_steps iterates.
std::vector<Vector> mean_recursion(const MomentModel& m, double eta, const Vector& v0,
                                   std::size_t n_steps);

/// Lexicographic operator of the weight-error correlation recursion,
/// K = I - eta (K1 + K2) + eta^2 K3 with K1 = I (x) R~, K2 = R~ (x) I and
/// K3[l + m r, p + q r] = [S~_{l,m}]_{p,q} (zero-based).
struct KMatrix {
  Matrix k;
  Matrix k1;
  Matrix k2;
  Matrix k3;
  double eta = 0.0;
};

KMatrix build_k(const MomentModel& m, double eta, Index k_cap = kDefaultKCap);

struct StabilityVerdict {
  bool stable;
  double spectral_radius;
};

StabilityVerdict mean_square_stable(const KMatrix& km);

/// J_min + tr(R~ C).
double mse_from_correlation(const MomentModel& m, const Matrix& c_tilde);

struct TransientState {
  SymMatrix c_tilde;
  std::int64_t n = 0;
  double mse = 0.0;
};

/// T~ with [T~]_{l,m} = tr(S~_{l,m} C), via the r^2 x r^2 matrix view of S~.
/// OpenMP-parallel over row blocks.
Matrix t_tilde(const MomentModel& m, const Matrix& c_tilde);

/// Symmetric part of T~ for symmetric C: S~ folded over (l <= m) x (p <= q),
/// about a quarter of the full work.
class PackedContraction {
 public:
  explicit PackedContraction(const MomentModel& m);

  /// T~ for symmetric c. OpenMP-parallel over row blocks.
  Matrix apply(const Matrix& c) const;

 private:
  Index r_;
  Matrix packed_;
};

/// One step of the correlation recursion
/// C+ = C + eta^2 (T~ + J_min R~) - eta (R~ C + C R~), symmetrized.
Matrix transient_step(const MomentModel& m, double eta, const Matrix& c_tilde);

struct TransientResult {
  LearningCurve curve;    // n_steps + 1 values, MSE(0) .. MSE(n_steps)
  TransientState final;
  bool mean_square_stable = true;  // false when the caller was warned
};

/// Theoretical learning curve from C~_0 = a~* a~*^T (alpha_0 = 0).
/// Throws DivergenceError carrying the last finite n on blow-up.
TransientResult transient_mse(const MomentModel& m, double eta, std::size_t n_steps);

struct SteadyState {
  double mse;
  SymMatrix c_inf;
  double spectral_radius;
};

/// c~_inf = eta^2 J_min (I - K)^{-1} r~ via pivoted LU. Refuses with
/// InstabilityError if K is not stable.
SteadyState steady_state_mse(const MomentModel& m, double eta, Index k_cap = kDefaultKCap);

struct Complexity {
  std::int64_t full;
  std::int64_t selective;
};

/// Real multiplications per iteration: (L + r + 2) r for the full update,
/// (L + s_n + 1) r + s_n^3 for the selective one.
Complexity complexity_report(std::int64_t r, std::int64_t L, std::int64_t s_n);

}  // namespace kaflab
