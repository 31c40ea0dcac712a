#include "kaflab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>
#include <sstream>

namespace kaflab {

Matrix coherence_stream(const ExperimentConfig& cfg) {
  const DictionarySpec& d = cfg.dictionary;
  const std::vector<double> raw = ar1_stream(cfg.input, d.stream_length + kBurnIn + 1,
                                             d.stream_seed);
  const Matrix all = embed_input(raw);
  return all.bottomRows(static_cast<Index>(d.stream_length));
}

Experiment build_experiment(const ExperimentConfig& cfg) {
  Experiment e;
  e.config = cfg;
  e.kernel = GaussianKernel(cfg.sigma);
  const DictionarySpec& spec = cfg.dictionary;
  switch (spec.kind) {
    case DictionaryKind::Grid:
      e.dictionary = grid_dictionary(spec.lo, spec.hi, spec.points_per_axis);
      break;
    case DictionaryKind::Coherence: {
      const Matrix stream = coherence_stream(cfg);
      if (spec.target_size > 0) {
        CoherenceCalibration cal = calibrate_coherence(stream, e.kernel, spec.target_size);
        e.mu0 = cal.mu0;
        e.dictionary = std::move(cal.dictionary);
      } else {
        e.mu0 = spec.mu0;
        e.dictionary = coherence_select(stream, e.kernel, spec.mu0);
      }
      break;
    }
    case DictionaryKind::File:
      e.dictionary = read_dictionary_csv(spec.path);
      break;
  }
  if (e.dictionary.input_dim() != 2) {
    throw DimensionError("experiments use two-tap inputs; dictionary has dimension " +
                         std::to_string(e.dictionary.input_dim()));
  }
  e.gram = gram(e.dictionary, e.kernel);
  e.input_model = InputModel(stationary_covariance(cfg.input.rho, cfg.input.sigma_u, 2));
  return e;
}

McSetup mc_setup(const Experiment& e, const FilterSettings& filter) {
  McSetup s;
  s.input = e.config.input;
  s.system = e.config.system;
  s.noise_sigma = e.config.sigma_nu;
  s.dictionary = &e.dictionary;
  s.kernel = &e.kernel;
  s.gram = &e.gram;
  s.filter = filter;
  s.seed = e.config.seed;
  return s;
}

McSetup mc_setup(const Experiment& e) { return mc_setup(e, e.config.filter); }

MomentModel experiment_model(const Experiment& e) {
  const ExperimentConfig& c = e.config;
  const CrossStats cs = estimate_cross_stats(c.input, c.system, c.sigma_nu, e.dictionary,
                                             e.kernel, c.cross_samples, c.cross_seed, c.shards);
  return build_model(e.dictionary, e.kernel, e.input_model, cs.p, cs.d2);
}

namespace {

struct Fnv1a {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ULL;
    }
  }
  template <class T>
  void value(const T& v) {
    bytes(&v, sizeof v);
  }
};

}  // namespace

std::string model_cache_key(const Experiment& e) {
  Fnv1a f;
  const Matrix& c = e.dictionary.centers();
  f.value(c.rows());
  f.value(c.cols());
  f.bytes(c.data(), sizeof(double) * static_cast<std::size_t>(c.size()));
  f.value(e.kernel.sigma());
  f.bytes(e.input_model.r_u.matrix().data(),
          sizeof(double) * static_cast<std::size_t>(e.input_model.r_u.matrix().size()));
  const ExperimentConfig& cfg = e.config;
  f.value(cfg.input.rho);
  f.value(cfg.input.sigma_u);
  f.value(static_cast<int>(cfg.system));
  f.value(cfg.sigma_nu);
  f.value(cfg.cross_samples);
  f.value(cfg.cross_seed);
  f.value(cfg.shards);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(f.h));
  return buf;
}

double tail_mean(const std::vector<double>& curve) {
  if (curve.empty()) throw Error("tail_mean: empty curve");
  const std::size_t count = std::max<std::size_t>(1, curve.size() / 10);
  double sum = 0.0;
  for (std::size_t n = curve.size() - count; n < curve.size(); ++n) sum += curve[n];
  return sum / static_cast<double>(count);
}

CompareMetrics compare_curves(const std::vector<double>& sim, const std::vector<double>& theory,
                              std::size_t skip) {
  CompareMetrics m;
  m.length = std::min(sim.size(), theory.size());
  m.truncated = sim.size() != theory.size();
  if (m.length == 0) throw Error("compare_curves: empty curve");
  const std::vector<double> s(sim.begin(), sim.begin() + static_cast<std::ptrdiff_t>(m.length));
  const std::vector<double> t(theory.begin(),
                              theory.begin() + static_cast<std::ptrdiff_t>(m.length));
  const auto rel = [](double a, double b) { return a == b ? 0.0 : std::abs(a - b) / b; };
  m.steady_band_rel_error = rel(tail_mean(s), tail_mean(t));
  for (std::size_t n = 0; n < m.length; ++n) {
    const double gap = s[n] == t[n] ? 0.0 : std::abs(std::log10(s[n]) - std::log10(t[n]));
    m.max_log_gap = std::max(m.max_log_gap, gap);
    if (n > skip) m.max_log_gap_after = std::max(m.max_log_gap_after, gap);
  }
  const std::size_t head = std::min<std::size_t>(11, m.length);
  double head_sum = 0.0;
  for (std::size_t n = 0; n < head; ++n) {
    head_sum += s[n];
    m.initial_max_rel_error = std::max(m.initial_max_rel_error, rel(s[n], t[0]));
  }
  m.initial_rel_error = rel(head_sum / static_cast<double>(head), t[0]);
  return m;
}

namespace {

struct Moments {
  Vector sum;
  Vector sum_sq;
};

// Sample sums of products of kernel values selected by `index_sets`.
Moments sample_products(const Dictionary& d, double sigma, const InputModel& im,
                        const std::vector<std::vector<Index>>& index_sets, std::size_t n,
                        std::uint64_t seed, int shards) {
  const GaussianKernel k(sigma);
  const Eigen::LLT<Matrix> llt(im.r_u.matrix());
  const Matrix chol = llt.matrixL();
  const Index m = static_cast<Index>(index_sets.size());
  const std::size_t n_shards = static_cast<std::size_t>(shards);
  std::vector<Moments> partial(n_shards, {Vector::Zero(m), Vector::Zero(m)});
#pragma omp parallel for schedule(dynamic, 1)
  for (int sh = 0; sh < shards; ++sh) {
    const std::size_t shard = static_cast<std::size_t>(sh);
    const std::size_t count = n / n_shards + (shard < n % n_shards ? 1 : 0);
    Rng rng(derive_seed(seed, shard));
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector z(d.input_dim());
    Vector kn(d.size());
    Moments& acc = partial[shard];
    for (std::size_t i = 0; i < count; ++i) {
      for (Index a = 0; a < z.size(); ++a) z(a) = normal(rng);
      const Vector u = chol * z;
      kernelized_input_into(d, k, u, kn);
      for (Index q = 0; q < m; ++q) {
        double prod = 1.0;
        for (Index idx : index_sets[static_cast<std::size_t>(q)]) prod *= kn(idx);
        acc.sum(q) += prod;
        acc.sum_sq(q) += prod * prod;
      }
    }
  }
  Moments total{Vector::Zero(m), Vector::Zero(m)};
  for (const Moments& p : partial) {
    total.sum += p.sum;
    total.sum_sq += p.sum_sq;
  }
  return total;
}

void append_rows(std::vector<MomentCheckRow>& rows, const std::string& name,
                 const std::vector<std::vector<Index>>& sets, const std::vector<double>& exact,
                 const Moments& mc, std::size_t n, double band) {
  const double dn = static_cast<double>(n);
  for (std::size_t q = 0; q < sets.size(); ++q) {
    const Index qi = static_cast<Index>(q);
    const double mean = mc.sum(qi) / dn;
    const double var = std::max(0.0, mc.sum_sq(qi) / dn - mean * mean) * dn / (dn - 1.0);
    const double se = std::sqrt(var / dn);
    const double z = se > 0.0 ? (mean - exact[q]) / se : (mean == exact[q] ? 0.0 : INFINITY);
    rows.push_back({name, sets[q], exact[q], mean, se, z, std::abs(z) <= band});
  }
}

}  // namespace

std::vector<MomentCheckRow> check_moments(const Dictionary& d, const GaussianKernel& k,
                                          const InputModel& im, const MomentCheckOptions& opt) {
  const Index r = d.size();
  const GaussianMomentEngine engine(k, im, 4);
  std::vector<MomentCheckRow> rows;

  std::vector<std::vector<Index>> second_sets;
  std::vector<double> second_exact;
  for (Index l = 0; l < r; ++l) {
    for (Index m = l; m < r; ++m) {
      second_sets.push_back({l, m});
      second_exact.push_back(engine.moment(d.centers(), {l, m}));
    }
  }
  const Moments ms = sample_products(d, k.sigma() * opt.mc_sigma_scale, im, second_sets,
                                     opt.second_samples, opt.seed, opt.shards);
  append_rows(rows, "R_kappa", second_sets, second_exact, ms, opt.second_samples, opt.band);

  if (opt.fourth_entries > 0) {
    Rng pick(derive_seed(opt.seed, 0xF0F0));
    std::uniform_int_distribution<Index> idx(0, r - 1);
    std::vector<std::vector<Index>> fourth_sets;
    std::vector<double> fourth_exact;
    for (Index q = 0; q < opt.fourth_entries; ++q) {
      std::vector<Index> set{idx(pick), idx(pick), idx(pick), idx(pick)};
      fourth_exact.push_back(engine.moment(d.centers(), {set[0], set[1], set[2], set[3]}));
      fourth_sets.push_back(std::move(set));
    }
    const Moments mf = sample_products(d, k.sigma() * opt.mc_sigma_scale, im, fourth_sets,
                                       opt.fourth_samples, derive_seed(opt.seed, 1), opt.shards);
    append_rows(rows, "S", fourth_sets, fourth_exact, mf, opt.fourth_samples, opt.band);
  }
  return rows;
}

}  // namespace kaflab
