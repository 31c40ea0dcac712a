#pragma once

#include <vector>

#include "kaflab/linalg.hpp"

namespace kaflab {

/// Dense r x r x r x r array, first index fastest:
/// offset(a, b, c, d) = a + r (b + r (c + r d)).
///
/// With this layout the data, read as an r^2 x r^2 column-major matrix, has
/// entry (a + r b, c + r d) at (a, b, c, d).
class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(Index r) : r_(r), data_(static_cast<std::size_t>(r * r * r * r), 0.0) {}

  Index dim() const noexcept { return r_; }
  std::size_t size() const noexcept { return data_.size(); }

  std::size_t offset(Index a, Index b, Index c, Index d) const noexcept {
    return static_cast<std::size_t>(a + r_ * (b + r_ * (c + r_ * d)));
  }
  double& operator()(Index a, Index b, Index c, Index d) { return data_[offset(a, b, c, d)]; }
  double operator()(Index a, Index b, Index c, Index d) const {
    return data_[offset(a, b, c, d)];
  }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  std::vector<double>& values() noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  /// View as the r^2 x r^2 matrix described above.
  Eigen::Map<const Matrix> as_matrix() const { return {data_.data(), r_ * r_, r_ * r_}; }

 private:
  Index r_ = 0;
  std::vector<double> data_;
};

/// Mode product with W^T: out(.., a, ..) = sum_b W(b, a) t(.., b, ..) on the
/// given mode (0..3). OpenMP-parallel over independent slices.
Tensor4 contract_mode(const Tensor4& t, int mode, const Matrix& w);

}  // namespace kaflab
