#include "kaflab/kernel.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace kaflab {

GaussianKernel::GaussianKernel(double sigma) : sigma_(sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error("GaussianKernel: sigma must be positive and finite");
  }
}

double GaussianKernel::operator()(const Eigen::Ref<const Vector>& x,
                                  const Eigen::Ref<const Vector>& y) const {
  if (x.size() != y.size()) {
    throw DimensionError("kappa: input lengths " + std::to_string(x.size()) + " and " +
                         std::to_string(y.size()));
  }
  return std::exp(-(x - y).squaredNorm() / (2.0 * sigma_ * sigma_));
}

double kappa(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y,
             const GaussianKernel& k) {
  return k(x, y);
}

Dictionary::Dictionary(Matrix centers) : centers_(std::move(centers)) {
  if (centers_.rows() < 1 || centers_.cols() < 1) {
    throw DimensionError("Dictionary: need at least one center of positive dimension");
  }
  if (!centers_.allFinite()) throw Error("Dictionary: non-finite center coordinate");
}

void kernelized_input_into(const Dictionary& d, const GaussianKernel& k,
                           const Eigen::Ref<const Vector>& u, Vector& out) {
  if (u.size() != d.input_dim()) {
    throw DimensionError("kernelized_input: input length " + std::to_string(u.size()) +
                         " != dictionary input_dim " + std::to_string(d.input_dim()));
  }
  const Matrix& c = d.centers();
  const double scale = -1.0 / (2.0 * k.sigma() * k.sigma());
  out.resize(c.rows());
  for (Index j = 0; j < c.rows(); ++j) {
    double dist2 = 0.0;
    for (Index a = 0; a < c.cols(); ++a) {
      const double diff = u(a) - c(j, a);
      dist2 += diff * diff;
    }
    out(j) = std::exp(scale * dist2);
  }
}

Vector kernelized_input(const Dictionary& d, const GaussianKernel& k,
                        const Eigen::Ref<const Vector>& u) {
  Vector out;
  kernelized_input_into(d, k, u, out);
  return out;
}

SymMatrix gram_matrix(const Dictionary& d, const GaussianKernel& k) {
  const Index r = d.size();
  Matrix g(r, r);
  for (Index l = 0; l < r; ++l) {
    g(l, l) = 1.0;
    for (Index m = l + 1; m < r; ++m) {
      g(l, m) = g(m, l) = k(d.centers().row(l).transpose(), d.centers().row(m).transpose());
    }
  }
  return SymMatrix(g);
}

ClosestPair closest_pair(const Dictionary& d) {
  if (d.size() < 2) throw Error("closest_pair: dictionary has fewer than two centers");
  ClosestPair best{0, 1, std::numeric_limits<double>::infinity()};
  for (Index i = 0; i < d.size(); ++i) {
    for (Index j = i + 1; j < d.size(); ++j) {
      const double dist = (d.centers().row(i) - d.centers().row(j)).norm();
      if (dist < best.distance) best = {i, j, dist};
    }
  }
  return best;
}

namespace {

std::string pair_message(const ClosestPair& p) {
  std::ostringstream os;
  os << "closest centers are " << p.i << " and " << p.j << " at distance " << p.distance;
  return os.str();
}

}  // namespace

GramFactor gram(const Dictionary& d, const GaussianKernel& k) {
  if (d.size() >= 2) {
    const ClosestPair p = closest_pair(d);
    if (p.distance < 1e-9) {
      throw NotPositiveDefinite("Gram matrix not positive definite: near-duplicate centers; " +
                                    pair_message(p),
                                0.0);
    }
  }
  GramFactor gf;
  gf.g = gram_matrix(d, k);
  PdSqrt roots;
  try {
    roots = pd_sqrt(gf.g);
  } catch (const NotPositiveDefinite& e) {
    throw NotPositiveDefinite(std::string(e.what()) + "; " + pair_message(closest_pair(d)),
                              e.eigenvalue());
  }
  gf.g_sqrt = std::move(roots.sqrt);
  gf.g_inv_sqrt = std::move(roots.inv_sqrt);
  gf.g_inv = SymMatrix(gf.g_inv_sqrt.matrix() * gf.g_inv_sqrt.matrix());
  gf.llt.compute(gf.g.matrix());
  if (gf.llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("Gram matrix Cholesky failed", 0.0);
  }
  return gf;
}

Dictionary grid_dictionary(const Vector& lo, const Vector& hi, Index points_per_axis,
                           Index cap) {
  if (lo.size() != hi.size() || lo.size() < 1) {
    throw DimensionError("grid_dictionary: lo and hi must have the same positive length");
  }
  if (points_per_axis < 1) throw Error("grid_dictionary: points_per_axis must be >= 1");
  for (Index a = 0; a < lo.size(); ++a) {
    if (!(lo(a) < hi(a))) throw Error("grid_dictionary: lo must be < hi elementwise");
  }
  const Index dim = lo.size();
  Index r = 1;
  for (Index a = 0; a < dim; ++a) {
    if (r > cap / points_per_axis) {
      throw SizeCapError("grid_dictionary: " + std::to_string(points_per_axis) + "^" +
                         std::to_string(dim) + " centers exceeds cap " + std::to_string(cap));
    }
    r *= points_per_axis;
  }
  auto axis_value = [&](Index a, Index i) {
    if (points_per_axis == 1) return lo(a);
    if (i == points_per_axis - 1) return hi(a);
    return lo(a) + (hi(a) - lo(a)) * static_cast<double>(i) /
                       static_cast<double>(points_per_axis - 1);
  };
  // First coordinate varies slowest.
  Matrix centers(r, dim);
  for (Index row = 0; row < r; ++row) {
    Index rem = row;
    for (Index a = dim - 1; a >= 0; --a) {
      centers(row, a) = axis_value(a, rem % points_per_axis);
      rem /= points_per_axis;
    }
  }
  return Dictionary(std::move(centers));
}

Dictionary coherence_select(const Matrix& samples, const GaussianKernel& k, double mu0) {
  if (samples.rows() < 1) throw Error("coherence_select: no samples");
  std::vector<Index> chosen{0};
  for (Index n = 1; n < samples.rows(); ++n) {
    double coherence = 0.0;
    for (Index j : chosen) {
      coherence = std::max(coherence, k(samples.row(n).transpose(), samples.row(j).transpose()));
      if (coherence > mu0) break;
    }
    if (coherence <= mu0) chosen.push_back(n);
  }
  Matrix centers(static_cast<Index>(chosen.size()), samples.cols());
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    centers.row(static_cast<Index>(i)) = samples.row(chosen[i]);
  }
  return Dictionary(std::move(centers));
}

CoherenceCalibration calibrate_coherence(const Matrix& samples, const GaussianKernel& k,
                                         Index target, int max_iterations) {
  if (target < 1) throw Error("calibrate_coherence: target must be >= 1");
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < max_iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    Dictionary d = coherence_select(samples, k, mid);
    if (d.size() == target) return {mid, std::move(d)};
    if (d.size() < target) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < std::numeric_limits<double>::epsilon()) break;
  }
  throw Error("calibrate_coherence: no threshold in (0,1) selects exactly " +
              std::to_string(target) + " atoms");
}

void write_dictionary_csv(const Dictionary& d, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  char buf[64];
  for (Index j = 0; j < d.size(); ++j) {
    for (Index a = 0; a < d.input_dim(); ++a) {
      std::snprintf(buf, sizeof buf, "%.17g", d.centers()(j, a));
      if (a > 0) out << ',';
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

Dictionary read_dictionary_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) {
        throw IoError(path.string() + ":" + std::to_string(lineno) + ": bad number '" + cell +
                      "'");
      }
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": ragged row");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError(path.string() + ": empty dictionary file");
  Matrix centers(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t j = 0; j < rows.size(); ++j) {
    for (std::size_t a = 0; a < rows[j].size(); ++a) {
      centers(static_cast<Index>(j), static_cast<Index>(a)) = rows[j][a];
    }
  }
  return Dictionary(std::move(centers));
}

}  // namespace kaflab
