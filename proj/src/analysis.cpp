#include "kaflab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace kaflab {

double mean_stability_bound(const MomentModel& m) {
  const EigDecomposition e = sym_eig(m.r_tilde);
  return 2.0 / e.values(e.values.size() - 1);
}

std::vector<Vector> mean_recursion(const MomentModel& m, double eta, const Vector& v0,
                                   std::size_t n_steps) {
  if (!(eta > 0.0)) throw Error("mean_recursion: eta must be positive");
  if (v0.size() != m.dim()) throw DimensionError("mean_recursion: v0 has wrong length");
  const Matrix a = Matrix::Identity(m.dim(), m.dim()) - eta * m.r_tilde.matrix();
  std::vector<Vector> out;
  out.reserve(n_steps + 1);
  out.push_back(v0);
  for (std::size_t n = 0; n < n_steps; ++n) out.push_back(a * out.back());
  return out;
}

KMatrix build_k(const MomentModel& m, double eta, Index k_cap) {
  if (!(eta >= 0.0)) throw Error("build_k: eta must be >= 0");
  const Index r = m.dim();
  const Index r2 = r * r;
  if (r2 > k_cap) {
    throw SizeCapError("build_k: r^2 = " + std::to_string(r2) + " exceeds cap " +
                       std::to_string(k_cap));
  }
  KMatrix km;
  km.eta = eta;
  const Matrix id = Matrix::Identity(r, r);
  km.k1 = kron(id, m.r_tilde.matrix());
  km.k2 = kron(m.r_tilde.matrix(), id);
  km.k3 = m.s_tilde.as_matrix();
  km.k = Matrix::Identity(r2, r2) - eta * (km.k1 + km.k2) + (eta * eta) * km.k3;
  return km;
}

StabilityVerdict mean_square_stable(const KMatrix& km) {
  const double rho = spectral_radius(km.k);
  return {rho < 1.0, rho};
}

double mse_from_correlation(const MomentModel& m, const Matrix& c_tilde) {
  return m.j_min + (m.r_tilde.matrix().cwiseProduct(c_tilde.transpose())).sum();
}

Matrix t_tilde(const MomentModel& m, const Matrix& c_tilde) {
  const Index r = m.dim();
  const Index r2 = r * r;
  const Eigen::Map<const Matrix> k3 = m.s_tilde.as_matrix();
  // [T~]_{l,m} = sum_{p,q} S~(l,m,p,q) C(q,p); C symmetric so vec(C) works.
  const Eigen::Map<const Vector> c(c_tilde.data(), r2);
  Matrix t(r, r);
  Eigen::Map<Vector> tv(t.data(), r2);
  const Index block = std::max<Index>(64, r2 / 16);
#pragma omp parallel for schedule(static)
  for (Index start = 0; start < r2; start += block) {
    const Index len = std::min(block, r2 - start);
    tv.segment(start, len).noalias() = k3.middleRows(start, len) * c;
  }
  return t;
}

PackedContraction::PackedContraction(const MomentModel& m) : r_(m.dim()) {
  const Index np = r_ * (r_ + 1) / 2;
  packed_.resize(np, np);
  Index row = 0;
  for (Index mm = 0; mm < r_; ++mm) {
    for (Index l = 0; l <= mm; ++l, ++row) {
      Index col = 0;
      for (Index q = 0; q < r_; ++q) {
        for (Index p = 0; p <= q; ++p, ++col) {
          double v = m.s_tilde(l, mm, p, q) + m.s_tilde(mm, l, p, q);
          if (p != q) v += m.s_tilde(l, mm, q, p) + m.s_tilde(mm, l, q, p);
          packed_(row, col) = 0.5 * v;
        }
      }
    }
  }
}

Matrix PackedContraction::apply(const Matrix& c) const {
  const Index np = packed_.rows();
  Vector cp(np);
  Index k = 0;
  for (Index q = 0; q < r_; ++q) {
    for (Index p = 0; p <= q; ++p) cp(k++) = c(p, q);
  }
  Vector tp(np);
  const Index block = std::max<Index>(32, np / 16);
#pragma omp parallel for schedule(static)
  for (Index start = 0; start < np; start += block) {
    const Index len = std::min(block, np - start);
    tp.segment(start, len).noalias() = packed_.middleRows(start, len) * cp;
  }
  Matrix t(r_, r_);
  k = 0;
  for (Index mm = 0; mm < r_; ++mm) {
    for (Index l = 0; l <= mm; ++l) t(l, mm) = t(mm, l) = tp(k++);
  }
  return t;
}

namespace {

Matrix step_with(const MomentModel& m, double eta, const Matrix& c, const Matrix& t) {
  const Matrix& rt = m.r_tilde.matrix();
  const Matrix rc = rt * c;
  Matrix next = c + (eta * eta) * (t + m.j_min * rt) - eta * (rc + rc.transpose());
  return 0.5 * (next + next.transpose());
}

}  // namespace

Matrix transient_step(const MomentModel& m, double eta, const Matrix& c_tilde) {
  return step_with(m, eta, c_tilde, t_tilde(m, c_tilde));
}

TransientResult transient_mse(const MomentModel& m, double eta, std::size_t n_steps) {
  if (!(eta > 0.0)) throw Error("transient_mse: eta must be positive");
  TransientResult res;
  res.curve.kind = CurveKind::Theoretical;
  res.curve.n_runs = 0;
  res.curve.mse.reserve(n_steps + 1);
  if (m.dim() * m.dim() <= kDefaultKCap) {
    res.mean_square_stable = mean_square_stable(build_k(m, eta)).stable;
  }

  const PackedContraction contraction(m);
  Matrix c = m.alpha_star_tilde * m.alpha_star_tilde.transpose();
  res.curve.mse.push_back(mse_from_correlation(m, c));
  for (std::size_t n = 0; n < n_steps; ++n) {
    Matrix next = step_with(m, eta, c, contraction.apply(c));
    const double mse = mse_from_correlation(m, next);
    if (!next.allFinite() || !std::isfinite(mse)) {
      std::ostringstream os;
      os << "transient_mse diverged at step " << n + 1 << " (eta = " << eta << ")";
      throw DivergenceError(os.str(), static_cast<std::int64_t>(n));
    }
    c = std::move(next);
    res.curve.mse.push_back(mse);
  }
  res.final.c_tilde = SymMatrix(c);
  res.final.n = static_cast<std::int64_t>(n_steps);
  res.final.mse = res.curve.mse.back();
  return res;
}

SteadyState steady_state_mse(const MomentModel& m, double eta, Index k_cap) {
  const KMatrix km = build_k(m, eta, k_cap);
  const StabilityVerdict v = mean_square_stable(km);
  if (!v.stable) {
    std::ostringstream os;
    os << "steady_state_mse: K is not stable (spectral radius " << v.spectral_radius << ")";
    throw InstabilityError(os.str(), v.spectral_radius);
  }
  const Index r = m.dim();
  const Index r2 = r * r;
  const Matrix a = Matrix::Identity(r2, r2) - km.k;
  const Eigen::PartialPivLU<Matrix> lu(a);
  const double max_entry = a.cwiseAbs().maxCoeff();
  const double min_pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
  if (!(min_pivot >= 1e-14 * max_entry)) {
    std::ostringstream os;
    os << "steady_state_mse: I - K is numerically singular (pivot " << min_pivot << ")";
    throw Error(os.str());
  }
  const Vector rhs = (eta * eta * m.j_min) * vec_lex(m.r_tilde);
  const Vector c_inf = lu.solve(rhs);
  SteadyState out{0.0, unvec_lex(c_inf, r), v.spectral_radius};
  out.mse = mse_from_correlation(m, out.c_inf.matrix());
  return out;
}

Complexity complexity_report(std::int64_t r, std::int64_t L, std::int64_t s_n) {
  if (r < 1 || L < 1 || s_n < 1) throw Error("complexity_report: arguments must be positive");
  if (s_n > r) throw Error("complexity_report: s_n exceeds the dictionary size");
  return {(L + r + 2) * r, (L + s_n + 1) * r + s_n * s_n * s_n};
}

}  // namespace kaflab
