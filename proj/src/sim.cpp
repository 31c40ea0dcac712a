#include "kaflab/sim.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "kaflab/filters.hpp"

namespace kaflab {

void InputGenerator::validate() const {
  if (!(rho >= 0.0 && rho < 1.0)) throw Error("input: rho must lie in [0, 1)");
  if (!(sigma_u > 0.0)) throw Error("input: sigma_u must be positive");
}

std::vector<double> ar1_stream(const InputGenerator& g, std::size_t n, std::uint64_t seed) {
  g.validate();
  std::vector<double> out;
  if (n == 0) return out;
  out.reserve(n);
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double innovation = g.sigma_u * std::sqrt(1.0 - g.rho * g.rho);
  double u = g.sigma_u * normal(rng);
  out.push_back(u);
  for (std::size_t i = 1; i < n; ++i) {
    u = g.rho * u + innovation * normal(rng);
    out.push_back(u);
  }
  return out;
}

Matrix embed_input(const std::vector<double>& stream) {
  if (stream.size() < 2) throw Error("embed_input: need at least two samples");
  const Index n = static_cast<Index>(stream.size()) - 1;
  Matrix out(n, 2);
  for (Index i = 0; i < n; ++i) {
    out(i, 0) = stream[static_cast<std::size_t>(i + 1)];
    out(i, 1) = stream[static_cast<std::size_t>(i)];
  }
  return out;
}

SymMatrix stationary_covariance(double rho, double sigma_u, Index taps) {
  if (!(std::abs(rho) < 1.0)) throw Error("stationary_covariance: |rho| must be < 1");
  Matrix c(taps, taps);
  for (Index a = 0; a < taps; ++a) {
    for (Index b = 0; b < taps; ++b) {
      c(a, b) = sigma_u * sigma_u * std::pow(rho, static_cast<double>(std::abs(a - b)));
    }
  }
  return SymMatrix(c);
}

std::string to_string(SystemKind kind) {
  switch (kind) {
    case SystemKind::Polynomial: return "polynomial";
    case SystemKind::FluidFlow: return "fluid_flow";
    case SystemKind::Null: return "null";
  }
  return "unknown";
}

SystemKind parse_system_kind(const std::string& name) {
  if (name == "polynomial") return SystemKind::Polynomial;
  if (name == "fluid_flow") return SystemKind::FluidFlow;
  if (name == "null") return SystemKind::Null;
  throw Error("unknown system kind '" + name + "' (expected polynomial, fluid_flow, null)");
}

double system1_step(double u_n, double u_prev, double noise) {
  const double x = 0.5 * u_n - 0.3 * u_prev;
  return x - 0.5 * x * x + 0.1 * x * x * x + noise;
}

double system2_step(double u_n, double u_prev, double& x1, double& x2, double noise) {
  const double x = 0.1044 * u_n + 0.0883 * u_prev + 1.4138 * x1 - 0.6065 * x2;
  x2 = x1;
  x1 = x;
  return 0.3163 * x / std::sqrt(0.1 + 0.9 * x * x) + noise;
}

SystemSimulator::SystemSimulator(SystemKind kind, double noise_sigma)
    : kind_(kind), noise_sigma_(noise_sigma) {
  if (!(noise_sigma >= 0.0)) throw Error("system: noise sigma must be >= 0");
}

double SystemSimulator::step_clean(double u_n, double u_prev) {
  switch (kind_) {
    case SystemKind::Polynomial: return system1_step(u_n, u_prev, 0.0);
    case SystemKind::FluidFlow: return system2_step(u_n, u_prev, x1_, x2_, 0.0);
    case SystemKind::Null: return 0.0;
  }
  return 0.0;
}

void SystemSimulator::reset() { x1_ = x2_ = 0.0; }

SignalSource::SignalSource(const InputGenerator& input, SystemKind kind, double noise_sigma,
                           std::uint64_t seed)
    : input_(input), plant_(kind, noise_sigma), rng_(seed) {
  input_.validate();
  prev_ = input_.sigma_u * normal_(rng_);
}

double SignalSource::next(Eigen::Ref<Vector> u) {
  const double innovation = input_.sigma_u * std::sqrt(1.0 - input_.rho * input_.rho);
  const double cur = input_.rho * prev_ + innovation * normal_(rng_);
  u(0) = cur;
  u(1) = prev_;
  const double clean = plant_.step_clean(cur, prev_);
  prev_ = cur;
  // Noise is drawn even when sigma is zero so streams stay aligned across settings.
  const double noise = plant_.noise_sigma() * normal_(rng_);
  return clean + noise;
}

void SignalSource::discard(std::size_t n) {
  Vector u(2);
  for (std::size_t i = 0; i < n; ++i) next(u);
}

std::string to_string(FilterKind kind) {
  switch (kind) {
    case FilterKind::NaturalKlms: return "natural_klms";
    case FilterKind::Selective: return "selective";
    case FilterKind::Knlms: return "knlms";
  }
  return "unknown";
}

FilterKind parse_filter_kind(const std::string& name) {
  if (name == "natural_klms") return FilterKind::NaturalKlms;
  if (name == "selective") return FilterKind::Selective;
  if (name == "knlms") return FilterKind::Knlms;
  throw Error("unknown filter kind '" + name + "' (expected natural_klms, selective, knlms)");
}

void write_curve_csv(const LearningCurve& c, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "n,mse\n";
  char buf[64];
  for (std::size_t n = 0; n < c.mse.size(); ++n) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", n, c.mse[n]);
    out << buf;
  }
  if (!out) throw IoError("write failed: " + path.string());
}

LearningCurve read_curve_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "n,mse") {
    throw IoError(path.string() + ": expected header 'n,mse'");
  }
  LearningCurve c;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": missing comma");
    }
    const char* start = line.c_str() + comma + 1;
    char* end = nullptr;
    const double v = std::strtod(start, &end);
    if (end == start) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": bad value");
    }
    c.mse.push_back(v);
  }
  return c;
}

namespace {

void check_setup(const McSetup& s) {
  if (s.dictionary == nullptr || s.kernel == nullptr || s.gram == nullptr) {
    throw Error("mc_learning_curve: dictionary, kernel and Gram factor must be prebuilt");
  }
  if (s.dictionary->input_dim() != 2) {
    throw DimensionError("mc_learning_curve: experiments use two-tap inputs");
  }
}

constexpr int kRunBlock = 8;

}  // namespace

std::vector<double> mc_single_run(const McSetup& setup, std::size_t n_iters,
                                  std::uint64_t run_index) {
  check_setup(setup);
  const Dictionary& dict = *setup.dictionary;
  SignalSource source(setup.input, setup.system, setup.noise_sigma,
                      derive_seed(setup.seed, run_index));
  source.discard(kBurnIn);
  FilterState state = FilterState::zeros(dict.size());
  std::vector<double> e2(n_iters);
  Vector u(2);
  Vector kn(dict.size());
  for (std::size_t n = 0; n < n_iters; ++n) {
    const double d = source.next(u);
    kernelized_input_into(dict, *setup.kernel, u, kn);
    StepRecord rec{};
    switch (setup.filter.kind) {
      case FilterKind::NaturalKlms:
        rec = natural_klms_step(state, *setup.gram, kn, d, setup.filter.eta);
        break;
      case FilterKind::Selective:
        rec = selective_step(state, *setup.gram, kn, d, setup.filter.eta, setup.filter.s_n);
        break;
      case FilterKind::Knlms:
        rec = knlms_step(state, kn, d, setup.filter.eta, setup.filter.eps_reg);
        break;
    }
    const double sq = rec.prior_error * rec.prior_error;
    if (!std::isfinite(sq)) {
      throw DivergenceError("run " + std::to_string(run_index) + " diverged at iteration " +
                                std::to_string(n),
                            static_cast<std::int64_t>(n) - 1);
    }
    e2[n] = sq;
  }
  return e2;
}

LearningCurve mc_learning_curve(const McSetup& setup, int n_runs, std::size_t n_iters) {
  check_setup(setup);
  if (n_runs < 1) throw Error("mc_learning_curve: n_runs must be >= 1");
  const int n_blocks = (n_runs + kRunBlock - 1) / kRunBlock;
  std::vector<std::vector<double>> partial(static_cast<std::size_t>(n_blocks));
  std::vector<std::string> failures(static_cast<std::size_t>(n_blocks));
  std::vector<std::int64_t> failed_at(static_cast<std::size_t>(n_blocks), -1);

#pragma omp parallel for schedule(dynamic, 1)
  for (int b = 0; b < n_blocks; ++b) {
    auto& acc = partial[static_cast<std::size_t>(b)];
    acc.assign(n_iters, 0.0);
    try {
      const int end = std::min(n_runs, (b + 1) * kRunBlock);
      for (int run = b * kRunBlock; run < end; ++run) {
        const std::vector<double> e2 = mc_single_run(setup, n_iters, static_cast<std::uint64_t>(run));
        for (std::size_t n = 0; n < n_iters; ++n) acc[n] += e2[n];
      }
    } catch (const DivergenceError& e) {
      failures[static_cast<std::size_t>(b)] = e.what();
      failed_at[static_cast<std::size_t>(b)] = e.last_finite();
    }
  }
  for (int b = 0; b < n_blocks; ++b) {
    if (!failures[static_cast<std::size_t>(b)].empty()) {
      throw DivergenceError(failures[static_cast<std::size_t>(b)],
                            failed_at[static_cast<std::size_t>(b)]);
    }
  }

  LearningCurve curve;
  curve.kind = CurveKind::Simulated;
  curve.n_runs = n_runs;
  curve.mse.assign(n_iters, 0.0);
  for (const auto& acc : partial) {
    for (std::size_t n = 0; n < n_iters; ++n) curve.mse[n] += acc[n];
  }
  for (double& v : curve.mse) v /= n_runs;
  return curve;
}

}  // namespace kaflab
