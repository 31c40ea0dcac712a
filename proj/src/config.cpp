#include "kaflab/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace kaflab {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Entry {
  std::string value;
  int line;
};

double to_double(const Entry& e, const std::string& key) {
  char* end = nullptr;
  const double v = std::strtod(e.value.c_str(), &end);
  if (end == e.value.c_str() || trim(end) != "") {
    throw ConfigError(key + ": expected a number, got '" + e.value + "'", e.line);
  }
  return v;
}

long long to_integer(const Entry& e, const std::string& key) {
  char* end = nullptr;
  const long long v = std::strtoll(e.value.c_str(), &end, 10);
  if (end == e.value.c_str() || trim(end) != "") {
    throw ConfigError(key + ": expected an integer, got '" + e.value + "'", e.line);
  }
  return v;
}

Vector to_vector(const Entry& e, const std::string& key) {
  std::vector<double> vals;
  std::stringstream ss(e.value);
  std::string cell;
  while (std::getline(ss, cell, ',')) vals.push_back(to_double({trim(cell), e.line}, key));
  if (vals.empty()) throw ConfigError(key + ": empty list", e.line);
  return Eigen::Map<Vector>(vals.data(), static_cast<Index>(vals.size()));
}

std::string fmt(double v) {
  // Shortest text that parses back to the same double.
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fmt(const Vector& v) {
  std::string out;
  for (Index i = 0; i < v.size(); ++i) {
    if (i > 0) out += ", ";
    out += fmt(v(i));
  }
  return out;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& origin) {
  std::map<std::string, Entry> entries;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw.substr(0, raw.find('#'));
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("unterminated section header", lineno);
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError("empty section name", lineno);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key = value", lineno);
    if (section.empty()) throw ConfigError("key outside of any section", lineno);
    const std::string key = section + "." + trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (value.empty()) throw ConfigError(key + ": empty value", lineno);
    if (entries.count(key)) throw ConfigError("duplicate key " + key, lineno);
    entries[key] = {value, lineno};
  }

  std::set<std::string> used;
  auto find = [&](const std::string& key) -> const Entry* {
    const auto it = entries.find(key);
    if (it == entries.end()) return nullptr;
    used.insert(key);
    return &it->second;
  };
  auto require = [&](const std::string& key) -> const Entry& {
    const Entry* e = find(key);
    if (e == nullptr) throw ConfigError("missing required key " + key, 0);
    return *e;
  };
  auto opt_double = [&](const std::string& key, double& out) {
    if (const Entry* e = find(key)) out = to_double(*e, key);
  };
  auto positive_int = [&](const std::string& key, auto& out, long long min_value) {
    if (const Entry* e = find(key)) {
      const long long v = to_integer(*e, key);
      if (v < min_value) {
        throw ConfigError(key + " must be >= " + std::to_string(min_value), e->line);
      }
      out = static_cast<std::remove_reference_t<decltype(out)>>(v);
    }
  };
  auto checked = [](const Entry& e, auto&& fn) {
    try {
      fn();
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& err) {
      throw ConfigError(err.what(), e.line);
    }
  };

  ExperimentConfig c;
  {
    const Entry& e = require("kernel.sigma");
    c.sigma = to_double(e, "kernel.sigma");
    if (!(c.sigma > 0.0)) throw ConfigError("kernel.sigma must be positive", e.line);
  }
  {
    const Entry& rho = require("input.rho");
    c.input.rho = to_double(rho, "input.rho");
    const Entry& su = require("input.sigma_u");
    c.input.sigma_u = to_double(su, "input.sigma_u");
    checked(rho, [&] { c.input.validate(); });
  }
  {
    const Entry& e = require("system.kind");
    checked(e, [&] { c.system = parse_system_kind(e.value); });
    opt_double("system.sigma_nu", c.sigma_nu);
    if (!(c.sigma_nu >= 0.0)) throw ConfigError("system.sigma_nu must be >= 0", e.line);
  }
  {
    const Entry& e = require("dictionary.kind");
    DictionarySpec& d = c.dictionary;
    if (e.value == "grid") {
      d.kind = DictionaryKind::Grid;
      d.lo = to_vector(require("dictionary.lo"), "dictionary.lo");
      d.hi = to_vector(require("dictionary.hi"), "dictionary.hi");
      positive_int("dictionary.points_per_axis", d.points_per_axis, 1);
      if (d.points_per_axis < 1) throw ConfigError("missing dictionary.points_per_axis", e.line);
      if (d.lo.size() != d.hi.size()) {
        throw ConfigError("dictionary.lo and dictionary.hi differ in length", e.line);
      }
    } else if (e.value == "coherence") {
      d.kind = DictionaryKind::Coherence;
      opt_double("dictionary.mu0", d.mu0);
      positive_int("dictionary.target_size", d.target_size, 1);
      positive_int("dictionary.stream_length", d.stream_length, 2);
      positive_int("dictionary.stream_seed", d.stream_seed, 0);
      if (d.target_size == 0 && !(d.mu0 > 0.0 && d.mu0 < 1.0)) {
        throw ConfigError("coherence dictionary needs mu0 in (0,1) or target_size", e.line);
      }
    } else if (e.value == "file") {
      d.kind = DictionaryKind::File;
      std::filesystem::path p = require("dictionary.path").value;
      if (p.is_relative() && !origin.empty()) p = origin.parent_path() / p;
      d.path = p;
    } else {
      throw ConfigError("dictionary.kind must be grid, coherence or file", e.line);
    }
  }
  {
    const Entry& e = require("filter.eta");
    c.filter.eta = to_double(e, "filter.eta");
    if (!(c.filter.eta > 0.0)) throw ConfigError("filter.eta must be positive", e.line);
    if (const Entry* k = find("filter.kind")) {
      checked(*k, [&] { c.filter.kind = parse_filter_kind(k->value); });
    }
    positive_int("filter.s_n", c.filter.s_n, 1);
    opt_double("filter.eps_reg", c.filter.eps_reg);
    if (!(c.filter.eps_reg > 0.0)) throw ConfigError("filter.eps_reg must be positive", e.line);
  }
  positive_int("run.n_runs", c.n_runs, 1);
  positive_int("run.n_iters", c.n_iters, 1);
  positive_int("run.seed", c.seed, 0);
  positive_int("run.theory_steps", c.theory_steps, 0);
  positive_int("moments.cross_samples", c.cross_samples, 10'000);
  positive_int("moments.cross_seed", c.cross_seed, 0);
  positive_int("moments.shards", c.shards, 1);

  for (const auto& [key, entry] : entries) {
    if (!used.count(key)) throw ConfigError("unknown or unused key " + key, entry.line);
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

std::string to_text(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "[kernel]\nsigma = " << fmt(c.sigma) << "\n\n";
  os << "[input]\nrho = " << fmt(c.input.rho) << "\nsigma_u = " << fmt(c.input.sigma_u)
     << "\n\n";
  os << "[system]\nkind = " << to_string(c.system) << "\nsigma_nu = " << fmt(c.sigma_nu)
     << "\n\n";
  os << "[dictionary]\n";
  const DictionarySpec& d = c.dictionary;
  switch (d.kind) {
    case DictionaryKind::Grid:
      os << "kind = grid\nlo = " << fmt(d.lo) << "\nhi = " << fmt(d.hi)
         << "\npoints_per_axis = " << d.points_per_axis << "\n";
      break;
    case DictionaryKind::Coherence:
      os << "kind = coherence\n";
      if (d.target_size > 0) os << "target_size = " << d.target_size << "\n";
      if (d.mu0 > 0.0) os << "mu0 = " << fmt(d.mu0) << "\n";
      os << "stream_length = " << d.stream_length << "\nstream_seed = " << d.stream_seed
         << "\n";
      break;
    case DictionaryKind::File:
      os << "kind = file\npath = " << d.path.string() << "\n";
      break;
  }
  os << "\n[filter]\nkind = " << to_string(c.filter.kind) << "\neta = " << fmt(c.filter.eta)
     << "\ns_n = " << c.filter.s_n << "\neps_reg = " << fmt(c.filter.eps_reg) << "\n\n";
  os << "[run]\nn_runs = " << c.n_runs << "\nn_iters = " << c.n_iters << "\nseed = " << c.seed
     << "\ntheory_steps = " << c.theory_steps << "\n\n";
  os << "[moments]\ncross_samples = " << c.cross_samples << "\ncross_seed = " << c.cross_seed
     << "\nshards = " << c.shards << "\n";
  return os.str();
}

}  // namespace kaflab
