#include "kaflab/filters.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace kaflab {

namespace {

void check_dims(const FilterState& s, const Vector& kappa_n) {
  if (s.alpha.size() != kappa_n.size()) {
    throw DimensionError("filter: alpha has length " + std::to_string(s.alpha.size()) +
                         " but kappa_n has length " + std::to_string(kappa_n.size()));
  }
}

void check_eta(double eta) {
  if (!(eta > 0.0)) throw Error("filter: step size must be positive");
}

}  // namespace

double predict(const FilterState& s, const Dictionary& d, const GaussianKernel& k,
               const Eigen::Ref<const Vector>& u) {
  const Vector kn = kernelized_input(d, k, u);
  check_dims(s, kn);
  return s.alpha.dot(kn);
}

StepRecord natural_klms_step(FilterState& s, const GramFactor& gf, const Vector& kappa_n,
                             double d, double eta) {
  check_dims(s, kappa_n);
  check_eta(eta);
  const double y = s.alpha.dot(kappa_n);
  const double e = d - y;
  s.alpha.noalias() += (eta * e) * gf.solve(kappa_n);
  ++s.iteration;
  return {e, y};
}

StepRecord natural_klms_step(FilterState& s, const GramFactor& gf, const Dictionary& dict,
                             const GaussianKernel& k, const Eigen::Ref<const Vector>& u,
                             double d, double eta) {
  return natural_klms_step(s, gf, kernelized_input(dict, k, u), d, eta);
}

std::vector<Index> select_atoms(const Vector& kappa_n, Index s_n) {
  const Index r = kappa_n.size();
  if (s_n < 1 || s_n > r) {
    throw Error("selective update: s_n = " + std::to_string(s_n) + " outside [1, " +
                std::to_string(r) + "]");
  }
  std::vector<Index> idx(static_cast<std::size_t>(r));
  std::iota(idx.begin(), idx.end(), Index{0});
  auto by_coherence = [&](Index a, Index b) {
    if (kappa_n(a) != kappa_n(b)) return kappa_n(a) > kappa_n(b);
    return a < b;
  };
  std::partial_sort(idx.begin(), idx.begin() + s_n, idx.end(), by_coherence);
  idx.resize(static_cast<std::size_t>(s_n));
  std::sort(idx.begin(), idx.end());
  return idx;
}

StepRecord selective_step(FilterState& s, const GramFactor& gf, const Vector& kappa_n,
                          double d, double eta, Index s_n) {
  check_dims(s, kappa_n);
  check_eta(eta);
  const double y = s.alpha.dot(kappa_n);
  const double e = d - y;
  const std::vector<Index> sel = select_atoms(kappa_n, s_n);
  if (s_n == 1) {
    const Index j = sel.front();
    s.alpha(j) += eta * e * kappa_n(j) / gf.g(j, j);
  } else {
    const Index m = s_n;
    Matrix g_ss(m, m);
    Vector k_s(m);
    for (Index a = 0; a < m; ++a) {
      k_s(a) = kappa_n(sel[a]);
      for (Index b = 0; b < m; ++b) g_ss(a, b) = gf.g(sel[a], sel[b]);
    }
    const Vector step = g_ss.llt().solve(k_s);
    for (Index a = 0; a < m; ++a) s.alpha(sel[a]) += eta * e * step(a);
  }
  ++s.iteration;
  return {e, y};
}

StepRecord selective_step(FilterState& s, const GramFactor& gf, const Dictionary& dict,
                          const GaussianKernel& k, const Eigen::Ref<const Vector>& u, double d,
                          double eta, Index s_n) {
  return selective_step(s, gf, kernelized_input(dict, k, u), d, eta, s_n);
}

StepRecord knlms_step(FilterState& s, const Vector& kappa_n, double d, double eta,
                      double eps_reg) {
  check_dims(s, kappa_n);
  check_eta(eta);
  if (!(eps_reg > 0.0)) throw Error("knlms: eps_reg must be positive");
  const double y = s.alpha.dot(kappa_n);
  const double e = d - y;
  s.alpha.noalias() += (eta * e / (eps_reg + kappa_n.squaredNorm())) * kappa_n;
  ++s.iteration;
  return {e, y};
}

StepRecord knlms_step(FilterState& s, const Dictionary& dict, const GaussianKernel& k,
                      const Eigen::Ref<const Vector>& u, double d, double eta, double eps_reg) {
  return knlms_step(s, kernelized_input(dict, k, u), d, eta, eps_reg);
}

}  // namespace kaflab
