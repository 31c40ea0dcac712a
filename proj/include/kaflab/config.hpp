#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "kaflab/sim.hpp"

namespace kaflab {

enum class DictionaryKind { Grid, Coherence, File };

struct DictionarySpec {
  DictionaryKind kind = DictionaryKind::Grid;
  // grid
  Vector lo;
  Vector hi;
  Index points_per_axis = 0;
  // coherence: fixed mu0, or bisection to target_size when target_size > 0
  double mu0 = 0.0;
  Index target_size = 0;
  std::size_t stream_length = 5000;
  std::uint64_t stream_seed = 1;
  // file
  std::filesystem::path path;
};

/// Experiment description read from a sectioned key = value file.
struct ExperimentConfig {
  double sigma = 0.0;
  InputGenerator input;
  SystemKind system = SystemKind::Polynomial;
  double sigma_nu = 0.0;
  DictionarySpec dictionary;
  FilterSettings filter;
  int n_runs = 1;
  std::size_t n_iters = 1000;
  std::uint64_t seed = 1;
  std::size_t cross_samples = 1'000'000;
  std::uint64_t cross_seed = 1;
  int shards = 8;
  std::size_t theory_steps = 0;  // 0: same as n_iters
};

/// Parses config text. `origin` prefixes error messages and resolves
/// relative dictionary paths. Errors are ConfigError with line numbers.
ExperimentConfig parse_config(const std::string& text,
                              const std::filesystem::path& origin = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical text form; parse_config(to_text(c)) reproduces c.
std::string to_text(const ExperimentConfig& c);

}  // namespace kaflab
