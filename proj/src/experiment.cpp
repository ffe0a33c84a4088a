#include "cdl/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "cdl/baseline.hpp"
#include "cdl/cksvd.hpp"
#include "cdl/parallel.hpp"
#include "cdl/rng.hpp"
#include "cdl/sketch.hpp"
#include "cdl/synth.hpp"

namespace cdl {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream stream(s);
  std::string tok;
  while (std::getline(stream, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) throw ConfigError("empty element in list: '" + s + "'");
    out.push_back(tok);
  }
  if (out.empty()) throw ConfigError("empty list value");
  return out;
}

Index parse_index(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long x = std::stoll(v, &pos);
    if (pos != v.size() || x < 0) throw std::invalid_argument(v);
    return Index(x);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': bad integer '" + v + "'");
  }
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size() || !std::isfinite(x)) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': bad number '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw ConfigError("config key '" + key + "': bad boolean '" + v + "'");
}

}  // namespace

double parse_fraction(const std::string& text) {
  const auto slash = text.find('/');
  double value = 0.0;
  if (slash == std::string::npos) {
    value = parse_double("fraction", text);
  } else {
    const double num = parse_double("fraction", trim(text.substr(0, slash)));
    const double den = parse_double("fraction", trim(text.substr(slash + 1)));
    if (den == 0.0) throw ConfigError("fraction with zero denominator: " + text);
    value = num / den;
  }
  if (!(value > 0.0) || !std::isfinite(value))
    throw ConfigError("fraction must be positive: " + text);
  return value;
}

Index sketch_size(Index p, double m_over_p) {
  if (!(m_over_p > 0.0)) throw ConfigError("m_over_p must be positive");
  const Index m = Index(std::llround(m_over_p * double(p)));
  if (m < 1 || m > p)
    throw ConfigError("m_over_p = " + format_g17(m_over_p) +
                      " gives sketch size " + std::to_string(m) +
                      " outside [1, p]");
  return m;
}

ExperimentConfig parse_experiment_config(std::istream& in) {
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  std::vector<std::string> seen;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected key=value, got '" + t + "'");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": empty key or value");
    if (std::find(seen.begin(), seen.end(), key) != seen.end())
      throw ConfigError("duplicate config key '" + key + "'");
    seen.push_back(key);

    if (key == "p") cfg.p = parse_index(key, value);
    else if (key == "K") cfg.K = parse_index(key, value);
    else if (key == "n") cfg.n = parse_index(key, value);
    else if (key == "L") cfg.L = parse_index(key, value);
    else if (key == "T") cfg.T = int(parse_index(key, value));
    else if (key == "iterations") cfg.iterations = int(parse_index(key, value));
    else if (key == "trials") cfg.trials = int(parse_index(key, value));
    else if (key == "m_over_p") cfg.m_over_p = parse_double(key, value);
    else if (key == "s") cfg.s = parse_double(key, value);
    else if (key == "ridge") cfg.ridge = parse_double(key, value);
    else if (key == "gamma_list") {
      std::vector<double> gammas;
      for (const auto& tok : split_list(value))
        gammas.push_back(parse_fraction(tok));
      cfg.gamma_list = std::move(gammas);
    } else if (key == "dist") {
      if (value != "gaussian" && value != "sparse_bernoulli")
        throw ConfigError("dist must be gaussian or sparse_bernoulli, got '" +
                          value + "'");
      cfg.dist = value;
    } else if (key == "master_seed") {
      try {
        std::size_t pos = 0;
        cfg.master_seed = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
      } catch (const std::exception&) {
        throw ConfigError("config key 'master_seed': bad integer '" + value +
                          "'");
      }
    } else if (key == "method") {
      const auto methods = split_list(value);
      for (const auto& mth : methods)
        if (mth != "cksvd" && mth != "aksvd" && mth != "kmeans")
          throw ConfigError("unknown method '" + mth +
                            "' (expected cksvd, aksvd or kmeans)");
      cfg.methods = methods;
    } else if (key == "delayed_refit") {
      cfg.delayed_refit = parse_bool(key, value);
    } else if (key == "output_path") {
      cfg.output_path = value;
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path.string());
  return parse_experiment_config(in);
}

void write_result_csv(std::ostream& out,
                      const std::vector<ExperimentRow>& rows) {
  out << kResultCsvHeader << '\n';
  for (const auto& r : rows)
    out << r.method << ',' << format_g17(r.gamma) << ',' << r.trial << ','
        << r.iteration << ',' << format_g17(r.recovery) << ','
        << format_g17(r.objective) << ',' << format_g17(r.seconds) << '\n';
}

namespace {

template <typename T>
const T& require(const std::optional<T>& opt, const char* key) {
  if (!opt) throw ConfigError(std::string("config key '") + key +
                              "' is required here");
  return *opt;
}

struct WorkItem {
  std::string method;
  double gamma = kNaN;       // NaN when not applicable
  std::size_t gamma_index = 0;
  int trial = 0;
  std::size_t row_offset = 0;  // position of this item's rows in the output
};

}  // namespace

std::vector<ExperimentRow> run_experiment(const ExperimentConfig& cfg,
                                          int threads) {
  const Index p = require(cfg.p, "p");
  const Index K = require(cfg.K, "K");
  const Index n = require(cfg.n, "n");
  const int T = require(cfg.T, "T");
  const int iterations = require(cfg.iterations, "iterations");
  const int trials = require(cfg.trials, "trials");
  const std::uint64_t master_seed = require(cfg.master_seed, "master_seed");
  const auto& methods = require(cfg.methods, "method");
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (iterations < 1) throw ConfigError("iterations must be >= 1");

  const bool has_cksvd =
      std::find(methods.begin(), methods.end(), "cksvd") != methods.end();
  for (const auto& mth : methods)
    if (mth == "kmeans")
      throw ConfigError(
          "method kmeans is not part of the synthetic benchmark; use the "
          "kmeans subcommand on sketched data");

  // gamma axis (cksvd only): compression sweep for sparse-Bernoulli
  // sketches, a single NaN-tagged run otherwise.
  Index m = 0;
  Index L = 0;
  std::vector<double> gammas{kNaN};
  bool sparse_dist = false;
  if (has_cksvd) {
    m = sketch_size(p, require(cfg.m_over_p, "m_over_p"));
    L = require(cfg.L, "L");
    const std::string& dist_name = require(cfg.dist, "dist");
    sparse_dist = dist_name == "sparse_bernoulli";
    if (sparse_dist) {
      if (cfg.gamma_list)
        gammas = *cfg.gamma_list;
      else if (cfg.s)
        gammas = {double(m) / *cfg.s};
      else
        throw ConfigError("sparse_bernoulli sketches need gamma_list or s");
    }
  }

  std::vector<WorkItem> items;
  std::size_t offset = 0;
  for (const auto& mth : methods) {
    const std::size_t gamma_count = mth == "cksvd" ? gammas.size() : 1;
    for (std::size_t g = 0; g < gamma_count; ++g)
      for (int trial = 0; trial < trials; ++trial) {
        WorkItem item;
        item.method = mth;
        item.gamma = mth == "cksvd" ? gammas[g] : kNaN;
        item.gamma_index = g;
        item.trial = trial;
        item.row_offset = offset;
        offset += std::size_t(iterations);
        items.push_back(std::move(item));
      }
  }

  std::vector<ExperimentRow> rows(offset);
  parallel_for(Index(items.size()), threads, [&](Index idx) {
    const WorkItem& item = items[std::size_t(idx)];
    const std::uint64_t trial_seed =
        mix_seed(master_seed, std::uint64_t(item.trial));

    SyntheticConfig synth;
    synth.p = p;
    synth.K = K;
    synth.n = n;
    synth.sparsity = T;
    synth.seed = trial_seed;
    const SyntheticData data = generate_synthetic(synth);
    const std::uint64_t init_seed = mix_seed(trial_seed, 7);

    auto emit = [&](int iteration, const Matrix& D, double objective,
                    double seconds) {
      ExperimentRow& row = rows[item.row_offset + std::size_t(iteration - 1)];
      row.method = item.method;
      row.gamma = item.gamma;
      row.trial = item.trial;
      row.iteration = iteration;
      row.recovery = match_atoms(D, data.dictionary).recovered_fraction;
      row.objective = objective;
      row.seconds = seconds;
    };
    const IterationObserver observer = [&](const IterationInfo& info) {
      emit(info.iteration, info.dictionary, info.objective, info.seconds);
    };

    if (item.method == "cksvd") {
      SketchConfig sk;
      sk.m = m;
      sk.blocks = L;
      sk.master_seed = mix_seed(trial_seed, 101 + item.gamma_index);
      sk.dist = sparse_dist
                    ? ProjectionDistribution::sparse_bernoulli(double(m) /
                                                               item.gamma)
                    : ProjectionDistribution::gaussian(1.0 / double(p));
      const auto sketched =
          sketch_blocks(data.X, partition_even(n, L), sk);

      TrainConfig tc;
      tc.sparsity = T;
      tc.iterations = iterations;
      tc.delayed_refit = cfg.delayed_refit.value_or(false);
      tc.ridge = cfg.ridge.value_or(0.0);
      tc.seed = init_seed;
      train(sketched, K, tc, nullptr, observer);
    } else {  // aksvd; same initial dictionary seed as the sketched runs
      aksvd_train(data.X, K, T, iterations, init_seed, nullptr, observer);
    }
  });
  return rows;
}

}  // namespace cdl
