#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "kaflab/kernel.hpp"
#include "kaflab/parallel.hpp"

namespace kaflab {

/// Scalar AR(1) source u_n = rho u_{n-1} + sigma_u sqrt(1 - rho^2) w_n.
struct InputGenerator {
  double rho = 0.0;
  double sigma_u = 1.0;

  void validate() const;
};

/// n samples; u_0 is drawn from the stationary law N(0, sigma_u^2).
std::vector<double> ar1_stream(const InputGenerator& g, std::size_t n, std::uint64_t seed);

/// Tap-delay embedding [u_n, u_{n-1}]: stream.size() - 1 rows of two columns.
Matrix embed_input(const std::vector<double>& stream);

/// Stationary covariance sigma_u^2 rho^|a-b| of an L-tap embedding.
SymMatrix stationary_covariance(double rho, double sigma_u, Index taps = 2);

enum class SystemKind { Polynomial, FluidFlow, Null };

std::string to_string(SystemKind kind);
SystemKind parse_system_kind(const std::string& name);

/// x = 0.5 u_n - 0.3 u_{n-1}; returns x - 0.5 x^2 + 0.1 x^3 + noise.
double system1_step(double u_n, double u_prev, double noise);

/// Plant for the nonlinear systems. The fluid-flow plant carries
/// x_{n-1}, x_{n-2}, both starting at zero.
class SystemSimulator {
 public:
  SystemSimulator(SystemKind kind, double noise_sigma);

  SystemKind kind() const noexcept { return kind_; }
  double noise_sigma() const noexcept { return noise_sigma_; }

  /// Noise-free output for (u_n, u_{n-1}); advances the plant state.
  double step_clean(double u_n, double u_prev);
  /// Output with additive noise `noise` (already scaled).
  double step(double u_n, double u_prev, double noise) { return step_clean(u_n, u_prev) + noise; }

  void reset();

 private:
  SystemKind kind_;
  double noise_sigma_;
  double x1_ = 0.0;
  double x2_ = 0.0;
};

/// One step of the fluid-flow plant. Updates x1 (x_{n-1}) and x2 (x_{n-2}).
double system2_step(double u_n, double u_prev, double& x1, double& x2, double noise);

/// Stationary (u_n embedded, d_n) source: AR(1) input feeding a plant.
/// Primed with one pre-sample so u_{n-1} exists at the first output.
class SignalSource {
 public:
  SignalSource(const InputGenerator& input, SystemKind kind, double noise_sigma,
               std::uint64_t seed);

  /// Writes u_n = [u_n, u_{n-1}] and returns d_n.
  double next(Eigen::Ref<Vector> u);
  void discard(std::size_t n);

 private:
  InputGenerator input_;
  SystemSimulator plant_;
  Rng rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  double prev_ = 0.0;
};

/// Samples discarded before any statistic or learning curve is accumulated.
inline constexpr std::size_t kBurnIn = 1000;

enum class FilterKind { NaturalKlms, Selective, Knlms };

std::string to_string(FilterKind kind);
FilterKind parse_filter_kind(const std::string& name);

enum class CurveKind { Simulated, Theoretical };

struct LearningCurve {
  std::vector<double> mse;
  int n_runs = 0;
  CurveKind kind = CurveKind::Simulated;
};

/// Header `n,mse`, one row per iteration, 17 significant digits.
void write_curve_csv(const LearningCurve& c, const std::filesystem::path& path);
LearningCurve read_curve_csv(const std::filesystem::path& path);

struct FilterSettings {
  FilterKind kind = FilterKind::NaturalKlms;
  double eta = 0.0;
  Index s_n = 1;
  double eps_reg = 1e-4;
};

/// Everything one Monte-Carlo learning curve needs, with the dictionary and
/// its Gram factor frozen ahead of time.
struct McSetup {
  InputGenerator input;
  SystemKind system = SystemKind::Polynomial;
  double noise_sigma = 0.0;
  const Dictionary* dictionary = nullptr;
  const GaussianKernel* kernel = nullptr;
  const GramFactor* gram = nullptr;
  FilterSettings filter;
  std::uint64_t seed = 0;
};

/// Squared a-priori error of run `run_index` (sub-seed derived from setup.seed).
/// Throws DivergenceError on a non-finite error.
std::vector<double> mc_single_run(const McSetup& setup, std::size_t n_iters,
                                  std::uint64_t run_index);

/// Pointwise average of e_n^2 over n_runs runs. Runs are spread over OpenMP
/// workers; partial sums use fixed run blocks so the result does not depend
/// on the thread count.
LearningCurve mc_learning_curve(const McSetup& setup, int n_runs, std::size_t n_iters);

}  // namespace kaflab
