#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "kaflab/moments.hpp"

namespace kaflab {

namespace {

constexpr const char* kMagic = "# kaflab moment model v1";

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_block(std::ostream& out, const std::string& name, const double* data, Index rows,
                 Index cols, bool row_major_source) {
  out << '[' << name << "] " << rows << ' ' << cols << '\n';
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      if (j > 0) out << ',';
      out << fmt(row_major_source ? data[i * cols + j] : data[i + j * rows]);
    }
    out << '\n';
  }
}

void write_matrix(std::ostream& out, const std::string& name, const Matrix& m) {
  write_block(out, name, m.data(), m.rows(), m.cols(), false);
}

void write_vector(std::ostream& out, const std::string& name, const Vector& v) {
  write_block(out, name, v.data(), 1, v.size(), true);
}

using Blocks = std::map<std::string, Matrix>;

Blocks read_blocks(std::istream& in, const std::string& origin) {
  Blocks blocks;
  std::string line;
  int lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw IoError(origin + ":" + std::to_string(lineno) + ": " + msg);
  };
  if (!std::getline(in, line) || line != kMagic) {
    ++lineno;
    fail("missing header '" + std::string(kMagic) + "'");
  }
  ++lineno;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line.front() != '[') fail("expected block header");
    const auto close = line.find(']');
    if (close == std::string::npos) fail("unterminated block name");
    const std::string name = line.substr(1, close - 1);
    std::istringstream dims(line.substr(close + 1));
    Index rows = 0;
    Index cols = 0;
    if (!(dims >> rows >> cols) || rows < 0 || cols < 0) fail("bad block dimensions");
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
      if (!std::getline(in, line)) fail("truncated block '" + name + "'");
      ++lineno;
      const char* p = line.c_str();
      for (Index j = 0; j < cols; ++j) {
        char* end = nullptr;
        m(i, j) = std::strtod(p, &end);
        if (end == p) fail("bad number in block '" + name + "'");
        p = end;
        if (j + 1 < cols) {
          if (*p != ',') fail("expected ',' in block '" + name + "'");
          ++p;
        }
      }
    }
    blocks[name] = std::move(m);
  }
  return blocks;
}

const Matrix& need(const Blocks& b, const std::string& name, const std::string& origin) {
  const auto it = b.find(name);
  if (it == b.end()) throw IoError(origin + ": missing block [" + name + "]");
  return it->second;
}

}  // namespace

void write_model(const MomentModel& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  const Index r = m.dim();
  out << kMagic << '\n';
  Vector scalars(3);
  scalars << m.sigma, m.d2, m.j_min;
  write_vector(out, "sigma,d2,j_min", scalars);
  write_matrix(out, "dictionary", m.dictionary.centers());
  write_matrix(out, "r_u", m.input.r_u.matrix());
  write_matrix(out, "r_kappa", m.r_kappa.matrix());
  write_vector(out, "p", m.p);
  write_matrix(out, "r_tilde", m.r_tilde.matrix());
  write_vector(out, "p_tilde", m.p_tilde);
  write_vector(out, "alpha_star_tilde", m.alpha_star_tilde);
  // r^3 rows of r values, first index fastest along a row.
  write_block(out, "s_tensor", m.s_tensor.data(), r * r * r, r, false);
  if (!out) throw IoError("write failed: " + path.string());
}

MomentModel read_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string origin = path.string();
  const Blocks b = read_blocks(in, origin);

  const Matrix& scalars = need(b, "sigma,d2,j_min", origin);
  if (scalars.size() != 3) throw IoError(origin + ": scalar block must hold 3 values");
  MomentModel m;
  m.sigma = scalars(0, 0);
  m.d2 = scalars(0, 1);
  m.j_min = scalars(0, 2);
  m.dictionary = Dictionary(need(b, "dictionary", origin));
  const Index r = m.dictionary.size();
  const GaussianKernel k(m.sigma);
  m.input = InputModel(SymMatrix(need(b, "r_u", origin)));
  m.gram = gram(m.dictionary, k);
  m.r_kappa = SymMatrix(need(b, "r_kappa", origin));
  m.r_tilde = SymMatrix(need(b, "r_tilde", origin));
  m.p = need(b, "p", origin).row(0).transpose();
  m.p_tilde = need(b, "p_tilde", origin).row(0).transpose();
  m.alpha_star_tilde = need(b, "alpha_star_tilde", origin).row(0).transpose();
  if (m.r_kappa.dim() != r || m.p.size() != r || m.r_tilde.dim() != r) {
    throw IoError(origin + ": block sizes disagree with the dictionary");
  }

  const Matrix& s = need(b, "s_tensor", origin);
  if (s.rows() != r * r * r || s.cols() != r) throw IoError(origin + ": bad s_tensor shape");
  m.s_tensor = Tensor4(r);
  for (Index row = 0; row < s.rows(); ++row) {
    for (Index col = 0; col < r; ++col) m.s_tensor.data()[row + col * s.rows()] = s(row, col);
  }
  transform_fourth(m.s_tensor, m.gram.g_inv_sqrt.matrix(), m.h, m.s_tilde);
  return m;
}

}  // namespace kaflab
