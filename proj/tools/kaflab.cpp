#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "kaflab/analysis.hpp"
#include "kaflab/config.hpp"
#include "kaflab/experiment.hpp"
#include "kaflab/parallel.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace kaflab;

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kNumerical = 3, kIo = 4 };

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// SHA-1 of "blob <size>\0<content>", as `git hash-object` prints it.
std::string git_blob_sha1(const std::string& content) {
  const std::string blob = "blob " + std::to_string(content.size()) + '\0' + content;
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(blob.data(), blob.size(), digest, &len, EVP_sha1(), nullptr) != 1) {
    throw Error("sha1 digest failed");
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot open " + p.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed: " + p.string());
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Manifest {
 public:
  Manifest(std::string command, const fs::path& config_path, const ExperimentConfig& cfg,
           const fs::path& out)
      : out_(out) {
    const std::string raw = read_file(config_path);
    doc_["tool"] = "kaflab";
    doc_["command"] = std::move(command);
    doc_["config_path"] = fs::absolute(config_path).string();
    doc_["config_sha1"] = git_blob_sha1(raw);
    doc_["config_resolved"] = to_text(cfg);
    doc_["seed"] = cfg.seed;
    doc_["output_dir"] = fs::absolute(out).string();
    doc_["threads"] = worker_count();
    doc_["started_at"] = utc_now();
    doc_["files"] = json::array();
  }

  json& operator[](const char* key) { return doc_[key]; }

  void add_file(const fs::path& p) {
    doc_["files"].push_back({{"name", p.filename().string()}, {"sha1", git_blob_sha1(read_file(p))}});
  }

  void write() {
    doc_["finished_at"] = utc_now();
    write_text(out_ / "manifest.json", doc_.dump(2) + "\n");
  }

 private:
  fs::path out_;
  json doc_;
};

void note_experiment(Manifest& m, const Experiment& e) {
  m["dictionary_size"] = e.dictionary.size();
  if (e.mu0) m["coherence_mu0"] = *e.mu0;
}

int cmd_simulate(const fs::path& config_path, const fs::path& out,
                 std::optional<std::uint64_t> seed) {
  ExperimentConfig cfg = load_config(config_path);
  if (seed) cfg.seed = *seed;
  ensure_dir(out);
  Manifest manifest("simulate", config_path, cfg, out);
  const Experiment e = build_experiment(cfg);
  note_experiment(manifest, e);
  std::cerr << "simulate: r = " << e.dictionary.size() << ", " << cfg.n_runs << " runs x "
            << cfg.n_iters << " iterations\n";
  const LearningCurve curve = mc_learning_curve(mc_setup(e), cfg.n_runs, cfg.n_iters);
  write_curve_csv(curve, out / "simulated.csv");
  manifest.add_file(out / "simulated.csv");
  manifest.write();
  return kOk;
}

fs::path default_cache_dir() {
  if (const char* env = std::getenv("KAFLAB_CACHE_DIR"); env && *env) return env;
  return ".kaflab-cache";
}

MomentModel load_or_build_model(const Experiment& e, const std::optional<fs::path>& cache) {
  if (!cache) return experiment_model(e);
  const fs::path file = *cache / ("model-" + model_cache_key(e) + ".txt");
  if (fs::exists(file)) {
    std::cerr << "analyze: moments from cache " << file << "\n";
    return read_model(file);
  }
  MomentModel m = experiment_model(e);
  ensure_dir(*cache);
  write_model(m, file);
  return m;
}

int cmd_analyze(const fs::path& config_path, const fs::path& out,
                const std::optional<fs::path>& cache) {
  const ExperimentConfig cfg = load_config(config_path);
  ensure_dir(out);
  Manifest manifest("analyze", config_path, cfg, out);
  const Experiment e = build_experiment(cfg);
  note_experiment(manifest, e);
  const MomentModel m = load_or_build_model(e, cache);
  const double eta = cfg.filter.eta;
  const Index r = m.dim();
  int status = kOk;

  const EigDecomposition ev = sym_eig(m.r_tilde);
  const double bound = mean_stability_bound(m);
  const bool mean_ok = eta < bound;
  std::ostringstream stab;
  stab << "eta = " << fmt(eta) << "\n"
       << "dictionary_size = " << r << "\n"
       << "lambda_min = " << fmt(ev.values(0)) << "\n"
       << "lambda_max = " << fmt(ev.values(r - 1)) << "\n"
       << "mean_bound = " << fmt(bound) << "\n"
       << "mean_stability = " << (mean_ok ? "PASS" : "FAIL") << "\n";
  if (!mean_ok) status = kNumerical;

  std::optional<KMatrix> km;
  bool ms_ok = false;
  if (r * r <= kDefaultKCap) {
    km = build_k(m, eta);
    const StabilityVerdict v = mean_square_stable(*km);
    ms_ok = v.stable;
    stab << "k_spectral_radius = " << fmt(v.spectral_radius) << "\n"
         << "mean_square_stability = " << (v.stable ? "PASS" : "FAIL") << "\n";
    if (!v.stable) status = kNumerical;
  } else {
    stab << "k_spectral_radius = unavailable (r^2 exceeds " << kDefaultKCap << ")\n"
         << "mean_square_stability = unavailable\n";
  }

  std::ostringstream steady;
  steady << "j_min = " << fmt(m.j_min) << "\n"
         << "d2 = " << fmt(m.d2) << "\n";
  if (km && ms_ok) {
    const SteadyState ss = steady_state_mse(m, eta);
    steady << "steady_state_mse = " << fmt(ss.mse) << "\n"
           << "excess_mse = " << fmt(ss.mse - m.j_min) << "\n"
           << "misadjustment = " << fmt((ss.mse - m.j_min) / m.j_min) << "\n"
           << "status = available\n";
  } else {
    steady << "steady_state_mse = unavailable\n"
           << "status = " << (km ? "unstable" : "size cap") << "\n";
  }

  const std::size_t rows = cfg.theory_steps > 0 ? cfg.theory_steps : cfg.n_iters;
  try {
    const TransientResult tr = transient_mse(m, eta, rows - 1);
    write_curve_csv(tr.curve, out / "theory.csv");
    manifest.add_file(out / "theory.csv");
    stab << "transient = finite\n";
  } catch (const DivergenceError& err) {
    std::cerr << "analyze: " << err.what() << "\n";
    stab << "transient = diverged after step " << err.last_finite() << "\n";
    status = kNumerical;
  }

  write_text(out / "stability.txt", stab.str());
  write_text(out / "steady_state.txt", steady.str());
  manifest.add_file(out / "stability.txt");
  manifest.add_file(out / "steady_state.txt");
  manifest["exit_code"] = status;
  manifest.write();
  std::cout << stab.str() << steady.str();
  return status;
}

int cmd_compare(const fs::path& sim_path, const fs::path& theory_path, const fs::path& out) {
  const LearningCurve sim = read_curve_csv(sim_path);
  const LearningCurve theory = read_curve_csv(theory_path);
  const CompareMetrics cm = compare_curves(sim.mse, theory.mse);
  if (cm.truncated) {
    std::cerr << "compare: warning: lengths differ (" << sim.mse.size() << " vs "
              << theory.mse.size() << "), truncated to " << cm.length << "\n";
  }
  ensure_dir(out);
  std::ostringstream overlay;
  overlay << "n,mse_sim,mse_theory\n";
  for (std::size_t n = 0; n < cm.length; ++n) {
    overlay << n << ',' << fmt(sim.mse[n]) << ',' << fmt(theory.mse[n]) << '\n';
  }
  write_text(out / "overlay.csv", overlay.str());
  std::ostringstream metrics;
  metrics << "length = " << cm.length << "\n"
          << "truncated = " << (cm.truncated ? "true" : "false") << "\n"
          << "steady_band_rel_error = " << fmt(cm.steady_band_rel_error) << "\n"
          << "max_log10_gap = " << fmt(cm.max_log_gap) << "\n"
          << "max_log10_gap_after_50 = " << fmt(cm.max_log_gap_after) << "\n"
          << "initial_rel_error = " << fmt(cm.initial_rel_error) << "\n"
          << "initial_max_rel_error = " << fmt(cm.initial_max_rel_error) << "\n";
  write_text(out / "metrics.txt", metrics.str());
  std::cout << metrics.str();
  return kOk;
}

int cmd_moments_check(const fs::path& config_path, const MomentCheckOptions& opt,
                      const std::optional<fs::path>& out) {
  const ExperimentConfig cfg = load_config(config_path);
  const Experiment e = build_experiment(cfg);
  const std::vector<MomentCheckRow> rows =
      check_moments(e.dictionary, e.kernel, e.input_model, opt);
  std::ostringstream csv;
  csv << "quantity,indices,closed_form,mc_mean,mc_stderr,z,pass\n";
  std::size_t passed = 0;
  for (const MomentCheckRow& row : rows) {
    std::string idx;
    for (Index i : row.indices) idx += (idx.empty() ? "" : " ") + std::to_string(i);
    csv << row.quantity << ',' << idx << ',' << fmt(row.closed_form) << ',' << fmt(row.mc_mean)
        << ',' << fmt(row.mc_stderr) << ',' << fmt(row.z) << ',' << (row.pass ? "PASS" : "FAIL")
        << '\n';
    if (row.pass) ++passed;
  }
  std::cout << csv.str();
  std::cout << "# passed " << passed << " / " << rows.size() << " at " << opt.band << " sigma\n";
  if (out) {
    ensure_dir(*out);
    write_text(*out / "moments_check.csv", csv.str());
  }
  return kOk;
}

int cmd_complexity(std::int64_t L, std::int64_t r_max, std::int64_t s_n, const fs::path& out) {
  if (L < 1 || r_max < 1 || s_n < 1) throw ConfigError("complexity: --L, --r-max and --s-n must be positive", 0);
  if (s_n > r_max) throw ConfigError("complexity: --s-n exceeds --r-max", 0);
  std::ostringstream csv;
  csv << "r,full,selective\n";
  for (std::int64_t r = 1; r <= r_max; ++r) {
    // Rows with r < s_n select the whole dictionary.
    const Complexity c = complexity_report(r, L, std::min(s_n, r));
    csv << r << ',' << c.full << ',' << c.selective << '\n';
  }
  ensure_dir(out);
  write_text(out / "complexity.csv", csv.str());
  return kOk;
}

template <class F>
int guarded(F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIo;
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return kNumerical;
  } catch (const InstabilityError& e) {
    std::cerr << "instability: " << e.what() << "\n";
    return kNumerical;
  } catch (const ConvergenceError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kNumerical;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIo;
  }
}

}  // namespace

int main(int argc, char** argv) {
  configure_threads();
  CLI::App app{"Natural KLMS simulation and transient analysis"};
  app.require_subcommand(1);

  fs::path config, out;
  std::optional<std::uint64_t> seed;
  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo learning curve");
  simulate->add_option("--config", config, "experiment config")->required();
  simulate->add_option("--out", out, "output directory")->required();
  simulate->add_option("--seed", seed, "override run.seed");

  std::string cache_dir;
  bool no_cache = false;
  auto* analyze = app.add_subcommand("analyze", "theoretical curve, steady state, stability");
  analyze->add_option("--config", config, "experiment config")->required();
  analyze->add_option("--out", out, "output directory")->required();
  analyze->add_option("--cache-dir", cache_dir,
                      "moment cache (default $KAFLAB_CACHE_DIR or .kaflab-cache)");
  analyze->add_flag("--no-cache", no_cache, "always recompute moments");

  fs::path sim_csv, theory_csv;
  auto* compare = app.add_subcommand("compare", "overlay and agreement metrics");
  compare->add_option("--sim", sim_csv, "simulated curve CSV")->required();
  compare->add_option("--theory", theory_csv, "theoretical curve CSV")->required();
  compare->add_option("--out", out, "output directory")->required();

  MomentCheckOptions mopt;
  std::optional<std::size_t> fourth_samples;
  std::string check_out;
  auto* moments = app.add_subcommand("moments-check", "closed-form moments vs sampling");
  moments->add_option("--config", config, "experiment config")->required();
  moments->add_option("--samples", mopt.second_samples, "samples for R_kappa entries")
      ->required()
      ->check(CLI::Range(std::size_t{2}, std::size_t{1} << 40));
  moments->add_option("--fourth-samples", fourth_samples,
                      "samples for S entries (default 10 x --samples)");
  moments->add_option("--fourth-entries", mopt.fourth_entries, "number of S entries")
      ->capture_default_str();
  moments->add_option("--seed", mopt.seed, "sampling seed")->capture_default_str();
  moments->add_option("--band", mopt.band, "pass band in standard errors")
      ->capture_default_str();
  moments->add_option("--mc-sigma-scale", mopt.mc_sigma_scale,
                      "kernel width factor on the sampling side only")
      ->capture_default_str();
  moments->add_option("--out", check_out, "also write moments_check.csv here");

  std::int64_t L = 0, r_max = 0, s_n = 0;
  fs::path complexity_out = ".";
  auto* complexity = app.add_subcommand("complexity", "per-iteration multiplication counts");
  complexity->add_option("--L", L, "input dimension")->required();
  complexity->add_option("--r-max", r_max, "largest dictionary size")->required();
  complexity->add_option("--s-n", s_n, "selected atoms")->required();
  complexity->add_option("--out", complexity_out, "output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  if (*simulate) return guarded([&] { return cmd_simulate(config, out, seed); });
  if (*analyze) {
    std::optional<fs::path> cache;
    if (!no_cache) cache = cache_dir.empty() ? default_cache_dir() : fs::path(cache_dir);
    return guarded([&] { return cmd_analyze(config, out, cache); });
  }
  if (*compare) return guarded([&] { return cmd_compare(sim_csv, theory_csv, out); });
  if (*moments) {
    mopt.fourth_samples = fourth_samples ? *fourth_samples : 10 * mopt.second_samples;
    std::optional<fs::path> dir;
    if (!check_out.empty()) dir = check_out;
    return guarded([&] { return cmd_moments_check(config, mopt, dir); });
  }
  if (*complexity) return guarded([&] { return cmd_complexity(L, r_max, s_n, complexity_out); });
  return kConfig;
}
