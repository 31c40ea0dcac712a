#pragma once

#include <cstdint>
#include <vector>

#include "kaflab/kernel.hpp"

namespace kaflab {

/// Coefficient vector of a filter living in the dictionary subspace.
struct FilterState {
  Vector alpha;
  std::uint64_t iteration = 0;

  static FilterState zeros(Index r) { return {Vector::Zero(r), 0}; }
};

struct StepRecord {
  double prior_error;  // d - prediction, before the update
  double prediction;
};

double predict(const FilterState& s, const Dictionary& d, const GaussianKernel& k,
               const Eigen::Ref<const Vector>& u);

// Steps taking a precomputed kernelized input kappa_n. The overloads taking
// (dictionary, kernel, u) compute kappa_n first.

/// alpha += eta e G^{-1} kappa_n.
StepRecord natural_klms_step(FilterState& s, const GramFactor& gf, const Vector& kappa_n,
                             double d, double eta);
StepRecord natural_klms_step(FilterState& s, const GramFactor& gf, const Dictionary& dict,
                             const GaussianKernel& k, const Eigen::Ref<const Vector>& u,
                             double d, double eta);

/// Indices of the s_n largest entries of kappa_n, ties to the lower index,
/// sorted ascending.
std::vector<Index> select_atoms(const Vector& kappa_n, Index s_n);

/// Updates only the selected coordinates S:
/// alpha_S += eta e (G_SS)^{-1} kappa_{n,S}.
StepRecord selective_step(FilterState& s, const GramFactor& gf, const Vector& kappa_n,
                          double d, double eta, Index s_n);
StepRecord selective_step(FilterState& s, const GramFactor& gf, const Dictionary& dict,
                          const GaussianKernel& k, const Eigen::Ref<const Vector>& u, double d,
                          double eta, Index s_n);

/// alpha += eta e kappa_n / (eps_reg + |kappa_n|^2).
StepRecord knlms_step(FilterState& s, const Vector& kappa_n, double d, double eta,
                      double eps_reg);
StepRecord knlms_step(FilterState& s, const Dictionary& dict, const GaussianKernel& k,
                      const Eigen::Ref<const Vector>& u, double d, double eta, double eps_reg);

}  // namespace kaflab
