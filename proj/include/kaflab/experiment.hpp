#pragma once

#include <optional>
#include <string>
#include <vector>

#include "kaflab/analysis.hpp"
#include "kaflab/config.hpp"
#include "kaflab/moments.hpp"

namespace kaflab {

/// A configuration resolved into its frozen ingredients. The dictionary
/// (and the calibrated coherence threshold, if any) is fixed before any
/// Monte-Carlo run and shared by all of them.
struct Experiment {
  ExperimentConfig config;
  GaussianKernel kernel{1.0};
  Dictionary dictionary;
  GramFactor gram;
  InputModel input_model;
  std::optional<double> mu0;  // threshold actually used by a coherence dictionary
};

Experiment build_experiment(const ExperimentConfig& cfg);

/// Embedded input stream used for coherence selection: stream_length
/// vectors from an AR(1) source seeded with stream_seed, after kBurnIn.
Matrix coherence_stream(const ExperimentConfig& cfg);

McSetup mc_setup(const Experiment& e);
McSetup mc_setup(const Experiment& e, const FilterSettings& filter);

/// Cross statistics from cfg's moments section, then build_model.
MomentModel experiment_model(const Experiment& e);

/// Hex digest identifying everything that determines the moment model.
std::string model_cache_key(const Experiment& e);

struct CompareMetrics {
  std::size_t length = 0;
  /// |mean(sim) - mean(theory)| / mean(theory) over the last 10% of samples.
  double steady_band_rel_error = 0.0;
  /// max_n |log10 sim(n) - log10 theory(n)| over the whole overlap.
  double max_log_gap = 0.0;
  /// Same maximum restricted to n > skip (see compare_curves).
  double max_log_gap_after = 0.0;
  /// |mean(sim[0..10]) - theory(0)| / theory(0).
  double initial_rel_error = 0.0;
  /// max_{n <= 10} |sim(n) - theory(0)| / theory(0).
  double initial_max_rel_error = 0.0;
  bool truncated = false;
};

/// Compares two curves over their common length. `skip` sets the start of
/// the transient window used for max_log_gap_after.
CompareMetrics compare_curves(const std::vector<double>& sim, const std::vector<double>& theory,
                              std::size_t skip = 50);

/// Mean of the last 10% (at least one sample) of a curve.
double tail_mean(const std::vector<double>& curve);

/// One row of a closed-form vs Monte-Carlo moment comparison.
struct MomentCheckRow {
  std::string quantity;  // "R_kappa" or "S"
  std::vector<Index> indices;
  double closed_form;
  double mc_mean;
  double mc_stderr;
  double z;
  bool pass;
};

struct MomentCheckOptions {
  std::size_t second_samples = 1'000'000;
  std::size_t fourth_samples = 10'000'000;
  Index fourth_entries = 20;
  std::uint64_t seed = 1;
  double band = 4.0;
  /// Kernel width multiplier applied to the Monte-Carlo side only
  /// (negative control).
  double mc_sigma_scale = 1.0;
  int shards = 8;
};

/// Draws u ~ N(0, R_u) and compares sample means of kernel products with the
/// closed forms: every upper-triangular R_kappa entry and `fourth_entries`
/// randomly chosen S entries.
std::vector<MomentCheckRow> check_moments(const Dictionary& d, const GaussianKernel& k,
                                          const InputModel& im, const MomentCheckOptions& opt);

}  // namespace kaflab
