#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "kaflab/config.hpp"
#include "kaflab/errors.hpp"

using namespace kaflab;

namespace {

const char* kMinimal = R"(# comment
[kernel]
sigma = 0.7
[input]
rho = 0.5
sigma_u = 0.5
[system]
kind = polynomial
sigma_nu = 0.05
[dictionary]
kind = grid
lo = -1, -1
hi = 1, 1
points_per_axis = 5
[filter]
eta = 0.075
)";

int error_line(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

std::string with(const std::string& extra) { return std::string(kMinimal) + extra; }

std::filesystem::path config_dir() { return std::filesystem::path(KAFLAB_SOURCE_DIR) / "configs"; }

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("minimal config with defaults") {
    const ExperimentConfig c = parse_config(kMinimal);
    CHECK(c.sigma == 0.7);
    CHECK(c.input.rho == 0.5);
    CHECK(c.system == SystemKind::Polynomial);
    CHECK(c.dictionary.kind == DictionaryKind::Grid);
    CHECK(c.dictionary.lo == Vector::Constant(2, -1.0));
    CHECK(c.dictionary.points_per_axis == 5);
    CHECK(c.filter.kind == FilterKind::NaturalKlms);
    CHECK(c.filter.s_n == 1);
    CHECK(c.n_runs == 1);
    CHECK(c.theory_steps == 0);
  }

  TEST_CASE("shipped experiment configs load") {
    const ExperimentConfig a = load_config(config_dir() / "experiment1.cfg");
    CHECK(a.filter.eta == 0.075);
    CHECK(a.n_runs == 300);
    CHECK(a.cross_samples == 10'000'000);
    const ExperimentConfig b = load_config(config_dir() / "experiment2.cfg");
    CHECK(b.system == SystemKind::FluidFlow);
    CHECK(b.sigma == 0.75);
    CHECK(b.dictionary.kind == DictionaryKind::Coherence);
    CHECK(b.dictionary.target_size == 31);
    CHECK(b.filter.eta == 0.01);
  }

  TEST_CASE("canonical text round trip") {
    for (const char* name : {"experiment1.cfg", "experiment2.cfg"}) {
      const ExperimentConfig a = load_config(config_dir() / name);
      const std::string text = to_text(a);
      const ExperimentConfig b = parse_config(text);
      CHECK(to_text(b) == text);
      CHECK(b.seed == a.seed);
      CHECK(b.sigma == a.sigma);
      CHECK(b.filter.eta == a.filter.eta);
    }
  }

  TEST_CASE("errors carry the offending line") {
    CHECK(error_line(with("[run]\nn_runs = 0\n")) == 18);
    CHECK(error_line(with("[run]\nbogus = 1\n")) == 18);
    CHECK(error_line(with("[filter]\neta = 0.1\n")) == 18);
    CHECK(error_line(with("[run]\nn_iters = ten\n")) == 18);
    CHECK(error_line(with("[run\n")) == 17);
    CHECK(error_line(with("[run]\njust words\n")) == 18);
    CHECK(error_line("sigma = 1\n") == 1);
    std::string bad_eta = kMinimal;
    bad_eta.replace(bad_eta.find("eta = 0.075"), 11, "eta = -1");
    CHECK(error_line(bad_eta) == 16);
    std::string bad_sys = kMinimal;
    bad_sys.replace(bad_sys.find("polynomial"), 10, "cubic");
    CHECK(error_line(bad_sys) == 8);
    std::string bad_rho = kMinimal;
    bad_rho.replace(bad_rho.find("rho = 0.5"), 9, "rho = 1.5");
    CHECK(error_line(bad_rho) == 5);
  }

  TEST_CASE("missing keys are named") {
    std::string text = kMinimal;
    text.replace(text.find("sigma = 0.7"), 11, "");
    CHECK_THROWS_WITH_AS(parse_config(text), doctest::Contains("kernel.sigma"), ConfigError);
  }

  TEST_CASE("coherence and file dictionaries") {
    const std::string coh = R"([kernel]
sigma = 1
[input]
rho = 0
sigma_u = 1
[system]
kind = null
[dictionary]
kind = coherence
mu0 = 0.3
[filter]
eta = 0.1
)";
    const ExperimentConfig c = parse_config(coh);
    CHECK(c.dictionary.mu0 == 0.3);
    CHECK(c.dictionary.target_size == 0);
    CHECK(parse_config(to_text(c)).dictionary.mu0 == 0.3);
    std::string no_mu = coh;
    no_mu.replace(no_mu.find("mu0 = 0.3"), 9, "");
    CHECK(error_line(no_mu) == 9);

    std::string file = coh;
    file.replace(file.find("kind = coherence\nmu0 = 0.3"), 26, "kind = file\npath = atoms.csv");
    const ExperimentConfig f = parse_config(file, "/data/exp/run.cfg");
    CHECK(f.dictionary.path == std::filesystem::path("/data/exp/atoms.csv"));
  }

  TEST_CASE("load_config reports unreadable files as IO errors") {
    CHECK_THROWS_AS(load_config("/nonexistent/kaflab.cfg"), IoError);
  }
}
