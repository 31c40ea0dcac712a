#include "kaflab/moments.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <sstream>

namespace kaflab {

InputModel::InputModel(SymMatrix cov) : r_u(std::move(cov)) {
  Eigen::LLT<Matrix> llt(r_u.matrix());
  if (llt.info() != Eigen::Success) {
    const EigDecomposition e = sym_eig(r_u);
    throw NotPositiveDefinite("input covariance R_u is not positive definite", e.values(0));
  }
}

GaussianMomentEngine::GaussianMomentEngine(const GaussianKernel& k, const InputModel& im,
                                           int max_order)
    : sigma2_(k.sigma() * k.sigma()), r_u_(im.r_u.matrix()) {
  if (r_u_.rows() == 0) throw Error("GaussianMomentEngine: empty input covariance");
  if (max_order < 1) throw Error("GaussianMomentEngine: max_order must be >= 1");
  const Index dim = r_u_.rows();
  for (int order = 1; order <= max_order; ++order) {
    const Matrix m = Matrix::Identity(dim, dim) + (order / sigma2_) * r_u_;
    Order o{Eigen::LLT<Matrix>(m), 0.0};
    if (o.llt.info() != Eigen::Success) {
      throw NotPositiveDefinite("GaussianMomentEngine: I + (K/sigma^2) R_u not PD", 0.0);
    }
    const double log_det = 2.0 * o.llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    o.det_factor = std::exp(-0.5 * log_det);
    orders_.push_back(std::move(o));
  }
}

double GaussianMomentEngine::evaluate(int k, const Vector& sum, double sq_sum) const {
  const Order& o = orders_[static_cast<std::size_t>(k - 1)];
  const Vector b = sum / sigma2_;
  const Vector y = o.llt.solve(b);
  const double quad = b.dot(r_u_ * y);
  const double c = -sq_sum / (2.0 * sigma2_);
  return o.det_factor * std::exp(c + 0.5 * quad);
}

double GaussianMomentEngine::moment(const Matrix& centers) const {
  const int k = static_cast<int>(centers.rows());
  if (k < 1 || k > max_order()) {
    throw Error("multi_point_moment: number of centers must be in [1, " +
                std::to_string(max_order()) + "]");
  }
  if (centers.cols() != r_u_.rows()) {
    throw DimensionError("multi_point_moment: center length " + std::to_string(centers.cols()) +
                         " != input dimension " + std::to_string(r_u_.rows()));
  }
  return evaluate(k, centers.colwise().sum().transpose(), centers.squaredNorm());
}

double GaussianMomentEngine::moment(const Matrix& dict_centers,
                                    std::initializer_list<Index> rows) const {
  const int k = static_cast<int>(rows.size());
  if (k < 1 || k > max_order()) throw Error("multi_point_moment: bad number of centers");
  Vector sum = Vector::Zero(dict_centers.cols());
  double sq = 0.0;
  for (Index row : rows) {
    sum += dict_centers.row(row).transpose();
    sq += dict_centers.row(row).squaredNorm();
  }
  return evaluate(k, sum, sq);
}

double multi_point_moment(const Matrix& centers, const GaussianKernel& k, const InputModel& im) {
  const int order = static_cast<int>(centers.rows());
  if (order < 1) throw Error("multi_point_moment: need at least one center");
  return GaussianMomentEngine(k, im, order).moment(centers);
}

SymMatrix second_moment(const Dictionary& d, const GaussianKernel& k, const InputModel& im) {
  const GaussianMomentEngine engine(k, im, 2);
  const Index r = d.size();
  const Matrix& c = d.centers();
  Matrix out(r, r);
  for (Index l = 0; l < r; ++l) {
    for (Index m = l; m < r; ++m) out(l, m) = out(m, l) = engine.moment(c, {l, m});
  }
  return SymMatrix(out);
}

Tensor4 fourth_tensor(const Dictionary& d, const GaussianKernel& k, const InputModel& im) {
  const GaussianMomentEngine engine(k, im, 4);
  const Index r = d.size();
  const Matrix& c = d.centers();
  Tensor4 s(r);
#pragma omp parallel for schedule(dynamic, 1)
  for (Index i = 0; i < r; ++i) {
    for (Index j = i; j < r; ++j) {
      for (Index a = j; a < r; ++a) {
        for (Index b = a; b < r; ++b) {
          const double v = engine.moment(c, {i, j, a, b});
          std::array<Index, 4> idx{i, j, a, b};
          do {
            s(idx[0], idx[1], idx[2], idx[3]) = v;
          } while (std::next_permutation(idx.begin(), idx.end()));
        }
      }
    }
  }
  return s;
}

namespace {

// Batch-means estimator shared by the plant-driven and target-driven entry
// points. `make_shard(shard)` returns a callable filling u and returning d.
template <class MakeShard>
CrossStats cross_stats_impl(const Dictionary& d, const GaussianKernel& k, std::size_t n_samples,
                            int shards, MakeShard make_shard) {
  if (n_samples < 10'000) throw Error("estimate_cross_stats: need at least 1e4 samples");
  if (shards < 1) throw Error("estimate_cross_stats: shards must be >= 1");
  if (d.input_dim() != 2) throw DimensionError("estimate_cross_stats: two-tap inputs only");
  constexpr std::size_t kBatchesPerShard = 50;
  const Index r = d.size();
  const std::size_t n_shards = static_cast<std::size_t>(shards);
  const std::size_t total_batches = n_shards * kBatchesPerShard;

  // Batch sums of d*kappa (rows 0..r-1) and d^2 (row r).
  Matrix batch_sums = Matrix::Zero(r + 1, static_cast<Index>(total_batches));
  std::vector<std::size_t> batch_counts(total_batches, 0);

#pragma omp parallel for schedule(dynamic, 1)
  for (int sh = 0; sh < shards; ++sh) {
    const std::size_t shard = static_cast<std::size_t>(sh);
    const std::size_t count = n_samples / n_shards + (shard < n_samples % n_shards ? 1 : 0);
    auto next = make_shard(shard);
    Vector u(2);
    Vector kn(r);
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t batch =
          shard * kBatchesPerShard + std::min(kBatchesPerShard - 1, i * kBatchesPerShard / count);
      const double dn = next(u);
      kernelized_input_into(d, k, u, kn);
      auto col = batch_sums.col(static_cast<Index>(batch));
      col.head(r) += dn * kn;
      col(r) += dn * dn;
      ++batch_counts[batch];
    }
  }

  CrossStats out;
  out.n_samples = n_samples;
  const Vector mean = batch_sums.rowwise().sum() / static_cast<double>(n_samples);
  Vector var = Vector::Zero(r + 1);
  std::size_t used = 0;
  for (std::size_t b = 0; b < total_batches; ++b) {
    if (batch_counts[b] == 0) continue;
    const Vector bm = batch_sums.col(static_cast<Index>(b)) / static_cast<double>(batch_counts[b]);
    var += (bm - mean).cwiseAbs2();
    ++used;
  }
  const double nb = static_cast<double>(used);
  const Vector se = (var / (nb - 1.0) / nb).cwiseSqrt();
  out.p = mean.head(r);
  out.d2 = mean(r);
  out.p_stderr = se.head(r);
  out.d2_stderr = se(r);
  return out;
}

}  // namespace

CrossStats estimate_cross_stats(const InputGenerator& input, SystemKind system,
                                double noise_sigma, const Dictionary& d,
                                const GaussianKernel& k, std::size_t n_samples,
                                std::uint64_t seed, int shards) {
  return cross_stats_impl(d, k, n_samples, shards, [&](std::size_t shard) {
    auto source = std::make_shared<SignalSource>(input, system, noise_sigma,
                                                 derive_seed(seed, shard));
    source->discard(kBurnIn);
    return [source](Vector& u) { return source->next(u); };
  });
}

CrossStats estimate_cross_stats(const InputGenerator& input,
                                const std::function<double(const Vector&)>& target,
                                const Dictionary& d, const GaussianKernel& k,
                                std::size_t n_samples, std::uint64_t seed, int shards) {
  return cross_stats_impl(d, k, n_samples, shards, [&](std::size_t shard) {
    auto source = std::make_shared<SignalSource>(input, SystemKind::Null, 0.0,
                                                 derive_seed(seed, shard));
    source->discard(kBurnIn);
    return [source, &target](Vector& u) {
      source->next(u);
      return target(u);
    };
  });
}

SymMatrix MomentModel::h_block(Index m, Index p) const {
  const Index r = dim();
  Matrix out(r, r);
  for (Index i = 0; i < r; ++i) {
    for (Index j = 0; j < r; ++j) out(i, j) = h(i, j, m, p);
  }
  return SymMatrix(out);
}

SymMatrix MomentModel::s_tilde_block(Index l, Index m) const {
  const Index r = dim();
  Matrix out(r, r);
  for (Index p = 0; p < r; ++p) {
    for (Index q = 0; q < r; ++q) out(p, q) = s_tilde(l, m, p, q);
  }
  return SymMatrix(out);
}

Vector MomentModel::alpha_star() const { return gram.g_inv_sqrt.matrix() * alpha_star_tilde; }

void transform_fourth(const Tensor4& s, const Matrix& g_inv_sqrt, Tensor4& h, Tensor4& s_tilde) {
  // x(i, j, m, p) = g_m^T S_{i,j} g_p
  h = contract_mode(contract_mode(s, 2, g_inv_sqrt), 3, g_inv_sqrt);
  // y(l, q, m, p) = g_l^T H_{m,p} g_q
  const Tensor4 y = contract_mode(contract_mode(h, 0, g_inv_sqrt), 1, g_inv_sqrt);
  const Index r = s.dim();
  s_tilde = Tensor4(r);
#pragma omp parallel for schedule(static)
  for (Index q = 0; q < r; ++q) {
    for (Index p = 0; p < r; ++p) {
      for (Index m = 0; m < r; ++m) {
        for (Index l = 0; l < r; ++l) s_tilde(l, m, p, q) = y(l, q, m, p);
      }
    }
  }
}

namespace {

void fill_second_order(MomentModel& mm, const Vector& p, double d2) {
  const Matrix& w = mm.gram.g_inv_sqrt.matrix();
  mm.r_tilde = SymMatrix(w * mm.r_kappa.matrix() * w);
  Eigen::LLT<Matrix> llt(mm.r_tilde.matrix());
  if (llt.info() != Eigen::Success) {
    const EigDecomposition e = sym_eig(mm.r_tilde);
    throw NotPositiveDefinite("transformed autocorrelation R~ is not positive definite",
                              e.values(0));
  }
  mm.p = p;
  mm.d2 = d2;
  mm.p_tilde = w * p;
  mm.alpha_star_tilde = llt.solve(mm.p_tilde);
  mm.j_min = d2 - mm.p_tilde.dot(mm.alpha_star_tilde);
}

}  // namespace

MomentModel build_model(const Dictionary& d, const GaussianKernel& k, const InputModel& im,
                        const Vector& p, double d2, Tensor4 s_tensor) {
  if (p.size() != d.size()) {
    throw DimensionError("build_model: p has length " + std::to_string(p.size()) +
                         ", dictionary has " + std::to_string(d.size()) + " centers");
  }
  if (im.r_u.dim() != d.input_dim()) {
    throw DimensionError("build_model: input covariance dimension mismatch");
  }
  if (s_tensor.dim() != d.size()) throw DimensionError("build_model: S tensor size mismatch");
  MomentModel mm;
  mm.dictionary = d;
  mm.sigma = k.sigma();
  mm.input = im;
  mm.gram = gram(d, k);
  mm.r_kappa = second_moment(d, k, im);
  fill_second_order(mm, p, d2);
  mm.s_tensor = std::move(s_tensor);
  transform_fourth(mm.s_tensor, mm.gram.g_inv_sqrt.matrix(), mm.h, mm.s_tilde);
  return mm;
}

MomentModel build_model(const Dictionary& d, const GaussianKernel& k, const InputModel& im,
                        const Vector& p, double d2) {
  return build_model(d, k, im, p, d2, fourth_tensor(d, k, im));
}

}  // namespace kaflab
