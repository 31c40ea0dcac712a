#include "kaflab/tensor.hpp"

#include <string>

namespace kaflab {

Tensor4 contract_mode(const Tensor4& t, int mode, const Matrix& w) {
  const Index r = t.dim();
  if (w.rows() != r || w.cols() != r) {
    throw DimensionError("contract_mode: weight matrix must be " + std::to_string(r) + "x" +
                         std::to_string(r));
  }
  Tensor4 out(r);
  const Matrix wt = w.transpose();
  const Index r2 = r * r;
  const Index r3 = r2 * r;
  using ConstMap = Eigen::Map<const Matrix>;
  using MutMap = Eigen::Map<Matrix>;
  switch (mode) {
    case 0: {
      // Columns are (b, c, d) fibers: out = W^T * T, split over column blocks.
#pragma omp parallel for schedule(static)
      for (Index d = 0; d < r; ++d) {
        ConstMap in(t.data() + d * r3, r, r2);
        MutMap o(out.data() + d * r3, r, r2);
        o.noalias() = wt * in;
      }
      break;
    }
    case 1: {
#pragma omp parallel for schedule(static)
      for (Index cd = 0; cd < r2; ++cd) {
        ConstMap in(t.data() + cd * r2, r, r);
        MutMap o(out.data() + cd * r2, r, r);
        o.noalias() = in * w;
      }
      break;
    }
    case 2: {
#pragma omp parallel for schedule(static)
      for (Index d = 0; d < r; ++d) {
        ConstMap in(t.data() + d * r3, r2, r);
        MutMap o(out.data() + d * r3, r2, r);
        o.noalias() = in * w;
      }
      break;
    }
    case 3: {
      // Rows are (a, b, c); split the r^3 rows into blocks.
      ConstMap in(t.data(), r3, r);
      MutMap o(out.data(), r3, r);
      const Index block = std::max<Index>(r2, 1);
#pragma omp parallel for schedule(static)
      for (Index start = 0; start < r3; start += block) {
        const Index len = std::min(block, r3 - start);
        o.middleRows(start, len).noalias() = in.middleRows(start, len) * w;
      }
      break;
    }
    default:
      throw DimensionError("contract_mode: mode must be 0..3");
  }
  return out;
}

}  // namespace kaflab
