#pragma once

#include <filesystem>
#include <utility>

#include "kaflab/linalg.hpp"

namespace kaflab {

/// Gaussian kernel exp(-|x - y|^2 / (2 sigma^2)).
class GaussianKernel {
 public:
  explicit GaussianKernel(double sigma);

  double sigma() const noexcept { return sigma_; }
  double operator()(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y) const;

 private:
  double sigma_;
};

double kappa(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y,
             const GaussianKernel& k);

/// Fixed set of kernel centers, one per row of `centers()`.
class Dictionary {
 public:
  Dictionary() = default;
  explicit Dictionary(Matrix centers);

  Index size() const noexcept { return centers_.rows(); }
  Index input_dim() const noexcept { return centers_.cols(); }
  const Matrix& centers() const noexcept { return centers_; }
  Vector center(Index j) const { return centers_.row(j).transpose(); }

 private:
  Matrix centers_;
};

/// G with G^{1/2}, G^{-1/2}, G^{-1}, and a cached Cholesky factor for solves.
struct GramFactor {
  SymMatrix g;
  SymMatrix g_sqrt;
  SymMatrix g_inv_sqrt;
  SymMatrix g_inv;
  Eigen::LLT<Matrix> llt;

  Index dim() const noexcept { return g.dim(); }
  /// G^{-1} x through the Cholesky factor.
  Vector solve(const Vector& x) const { return llt.solve(x); }
};

/// kappa_n: entry l is kappa(u, center l).
Vector kernelized_input(const Dictionary& d, const GaussianKernel& k,
                        const Eigen::Ref<const Vector>& u);

/// Same as kernelized_input, written into a preallocated vector.
void kernelized_input_into(const Dictionary& d, const GaussianKernel& k,
                           const Eigen::Ref<const Vector>& u, Vector& out);

SymMatrix gram_matrix(const Dictionary& d, const GaussianKernel& k);

/// Gram matrix and its factorizations. Centers closer than 1e-9 or a
/// non-PD Gram raise NotPositiveDefinite naming the closest pair.
GramFactor gram(const Dictionary& d, const GaussianKernel& k);

/// Closest pair of centers (indices and Euclidean distance). Requires size >= 2.
struct ClosestPair {
  Index i;
  Index j;
  double distance;
};
ClosestPair closest_pair(const Dictionary& d);

inline constexpr Index kDefaultDictionaryCap = 10'000;

/// Cartesian grid, endpoints inclusive; one point per axis sits at lo.
Dictionary grid_dictionary(const Vector& lo, const Vector& hi, Index points_per_axis,
                           Index cap = kDefaultDictionaryCap);

/// Greedy coherence pass: a sample enters iff its max kernel value against
/// current centers is <= mu0. The first sample always enters.
Dictionary coherence_select(const Matrix& samples, const GaussianKernel& k, double mu0);

struct CoherenceCalibration {
  double mu0;
  Dictionary dictionary;
};

/// Bisects mu0 in (0, 1) until coherence_select yields exactly `target` atoms
/// on the given samples. Throws Error if no threshold hits the target.
CoherenceCalibration calibrate_coherence(const Matrix& samples, const GaussianKernel& k,
                                         Index target, int max_iterations = 200);

/// One center per line, comma separated, 17 significant digits.
void write_dictionary_csv(const Dictionary& d, const std::filesystem::path& path);
Dictionary read_dictionary_csv(const std::filesystem::path& path);

}  // namespace kaflab
