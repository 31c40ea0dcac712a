#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <vector>

#include "kaflab/kernel.hpp"
#include "kaflab/sim.hpp"
#include "kaflab/tensor.hpp"

namespace kaflab {

/// Zero-mean Gaussian input with covariance R_u (must be PD).
/// A near-deterministic input is expressed as eps * I with small eps.
struct InputModel {
  SymMatrix r_u;

  explicit InputModel(SymMatrix cov);
  InputModel() = default;
};

/// E[prod_k kappa(u, c_k)] for u ~ N(0, R_u), in closed form.
///
/// With K centers the integrand is exp(-u^T A u + b^T u + c) where
/// A = K/(2 sigma^2) I, b = sum c_k / sigma^2, c = -sum |c_k|^2 / (2 sigma^2),
/// and the Gaussian integral gives
///   |I + 2 R_u A|^{-1/2} exp(c + 1/2 b^T (R_u^{-1} + 2A)^{-1} b).
/// (R_u^{-1} + 2A)^{-1} b is evaluated as R_u (I + 2a R_u)^{-1} b, so R_u is
/// never inverted.
class GaussianMomentEngine {
 public:
  GaussianMomentEngine(const GaussianKernel& k, const InputModel& im, int max_order = 4);

  /// Rows of `centers` are the K points (K <= max_order).
  double moment(const Matrix& centers) const;
  /// Same with centers given by row indices into a dictionary matrix.
  double moment(const Matrix& dict_centers, std::initializer_list<Index> rows) const;

  int max_order() const noexcept { return static_cast<int>(orders_.size()); }

 private:
  struct Order {
    Eigen::LLT<Matrix> llt;  // of I + (K / sigma^2) R_u
    double det_factor;       // |I + (K / sigma^2) R_u|^{-1/2}
  };
  double evaluate(int k, const Vector& sum, double sq_sum) const;

  double sigma2_;
  Matrix r_u_;
  std::vector<Order> orders_;
};

/// One-off K-point moment.
double multi_point_moment(const Matrix& centers, const GaussianKernel& k, const InputModel& im);

/// R_kappa, entry (l, m) = E[kappa(u, c_l) kappa(u, c_m)].
SymMatrix second_moment(const Dictionary& d, const GaussianKernel& k, const InputModel& im);

/// S(i, j, s, t) = E[kappa_i kappa_j kappa_s kappa_t]. Each multiset
/// i <= j <= s <= t is evaluated once and mirrored to its permutations.
/// OpenMP-parallel.
Tensor4 fourth_tensor(const Dictionary& d, const GaussianKernel& k, const InputModel& im);

/// Sample means of d_n kappa_n and d_n^2 from a simulated stream.
struct CrossStats {
  Vector p;
  double d2 = 0.0;
  Vector p_stderr;
  double d2_stderr = 0.0;
  std::size_t n_samples = 0;
};

/// Shards the sample budget across `shards` independent streams (seeds
/// derived from `seed`), each after kBurnIn discarded samples. Standard
/// errors come from batch means so serial correlation is accounted for.
/// (seed, n_samples, shards) fully determine the output.
CrossStats estimate_cross_stats(const InputGenerator& input, SystemKind system,
                                double noise_sigma, const Dictionary& d,
                                const GaussianKernel& k, std::size_t n_samples,
                                std::uint64_t seed, int shards = 8);

/// Same estimator with d_n = target(u_n) for a memoryless target (no noise).
CrossStats estimate_cross_stats(const InputGenerator& input,
                                const std::function<double(const Vector&)>& target,
                                const Dictionary& d, const GaussianKernel& k,
                                std::size_t n_samples, std::uint64_t seed, int shards = 8);

/// Every statistical quantity used by the theoretical model.
struct MomentModel {
  Dictionary dictionary;
  double sigma = 0.0;
  InputModel input;
  GramFactor gram;

  SymMatrix r_kappa;
  Vector p;
  double d2 = 0.0;

  SymMatrix r_tilde;        // G^{-1/2} R_kappa G^{-1/2}
  Vector p_tilde;           // G^{-1/2} p
  Vector alpha_star_tilde;  // R~^{-1} p~
  double j_min = 0.0;       // d2 - p~^T R~^{-1} p~

  Tensor4 s_tensor;  // S(i, j, s, t) = [S_{i,j}]_{s,t}
  Tensor4 h;         // h(i, j, m, p) = [H_{m,p}]_{i,j}
  Tensor4 s_tilde;   // s_tilde(l, m, p, q) = [S~_{l,m}]_{p,q}

  Index dim() const noexcept { return dictionary.size(); }
  SymMatrix h_block(Index m, Index p) const;
  SymMatrix s_tilde_block(Index l, Index m) const;
  /// Coefficients of the optimal filter in the original basis, G^{-1/2} alpha~*.
  Vector alpha_star() const;
};

/// Assembles the model from the dictionary, kernel, input law and the
/// (externally estimated) cross statistics. Throws NotPositiveDefinite if
/// R~ is not PD.
MomentModel build_model(const Dictionary& d, const GaussianKernel& k, const InputModel& im,
                        const Vector& p, double d2);

/// Variant reusing an already computed fourth tensor S.
MomentModel build_model(const Dictionary& d, const GaussianKernel& k, const InputModel& im,
                        const Vector& p, double d2, Tensor4 s_tensor);

/// H and S~ from S and G^{-1/2} by successive mode products.
void transform_fourth(const Tensor4& s, const Matrix& g_inv_sqrt, Tensor4& h, Tensor4& s_tilde);

/// Structured-text serialization: named CSV blocks. Derived fields (Gram
/// factors, H, S~) are recomputed on load from the stored primaries with the
/// same deterministic code path.
void write_model(const MomentModel& m, const std::filesystem::path& path);
MomentModel read_model(const std::filesystem::path& path);

}  // namespace kaflab
