#include "cdl/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>

#include "cdl/baseline.hpp"
#include "cdl/cksvd.hpp"
#include "cdl/experiment.hpp"
#include "cdl/kmeans.hpp"
#include "cdl/matrix_io.hpp"
#include "cdl/parallel.hpp"
#include "cdl/sketch.hpp"
#include "cdl/synth.hpp"
#include "cdl/theory.hpp"

namespace cdl {

namespace {

namespace fs = std::filesystem;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <typename T>
const T& require(const std::optional<T>& opt, const char* key) {
  if (!opt)
    throw ConfigError(std::string("config key '") + key + "' is required here");
  return *opt;
}

fs::path resolve_output(const std::string& flag, const ExperimentConfig& cfg) {
  if (!flag.empty()) return flag;
  if (cfg.output_path) return *cfg.output_path;
  throw ConfigError("no output location: pass --output or set output_path");
}

// The single method a non-benchmark subcommand runs.
std::string single_method(const ExperimentConfig& cfg) {
  const auto& methods = require(cfg.methods, "method");
  if (methods.size() != 1)
    throw ConfigError("this subcommand needs exactly one method");
  return methods.front();
}

ProjectionDistribution sketch_dist(const ExperimentConfig& cfg, Index p,
                                   Index m, double gaussian_variance) {
  const std::string& name = require(cfg.dist, "dist");
  if (name == "gaussian")
    return ProjectionDistribution::gaussian(
        gaussian_variance > 0.0 ? gaussian_variance : 1.0 / double(p));
  double s = 0.0;
  if (cfg.s) {
    s = *cfg.s;
  } else if (cfg.gamma_list) {
    if (cfg.gamma_list->size() != 1)
      throw ConfigError(
          "a single sketch needs one compression factor; set s or a "
          "one-element gamma_list");
    s = double(m) / cfg.gamma_list->front();
  } else {
    throw ConfigError("sparse_bernoulli sketches need s or gamma_list");
  }
  return ProjectionDistribution::sparse_bernoulli(s);
}

void write_history(const fs::path& path, const std::string& method,
                   double gamma, const std::vector<double>& objective,
                   const std::vector<double>& seconds,
                   const std::vector<double>& recovery) {
  std::vector<ExperimentRow> rows(objective.size());
  for (std::size_t i = 0; i < objective.size(); ++i) {
    rows[i].method = method;
    rows[i].gamma = gamma;
    rows[i].trial = 0;
    rows[i].iteration = int(i) + 1;
    rows[i].recovery = recovery.empty() ? kNaN : recovery[i];
    rows[i].objective = objective[i];
    rows[i].seconds = seconds[i];
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_result_csv(out, rows);
  if (!out) throw IoError("write failed: " + path.string());
}

// ---- subcommand bodies ----------------------------------------------------

int cmd_gen(const std::string& config_path, const std::string& output) {
  const ExperimentConfig cfg = load_experiment_config(config_path);
  SyntheticConfig synth;
  synth.p = require(cfg.p, "p");
  synth.K = require(cfg.K, "K");
  synth.n = require(cfg.n, "n");
  synth.sparsity = require(cfg.T, "T");
  synth.seed = require(cfg.master_seed, "master_seed");
  const fs::path dir = resolve_output(output, cfg);
  fs::create_directories(dir);
  const SyntheticData data = generate_synthetic(synth);
  write_matrix(dir / "X.cdlm", data.X);
  write_matrix(dir / "true_dictionary.cdlm", data.dictionary);
  std::cout << "wrote " << (dir / "X.cdlm").string() << " (" << synth.p << " x "
            << synth.n << ") and true_dictionary.cdlm\n";
  return 0;
}

int cmd_sketch(const std::string& config_path, const std::string& input,
               const std::string& output, double variance) {
  const ExperimentConfig cfg = load_experiment_config(config_path);
  const Matrix X = read_matrix(input);
  const Index p = X.rows();
  const Index m = sketch_size(p, require(cfg.m_over_p, "m_over_p"));
  SketchConfig sk;
  sk.m = m;
  sk.blocks = require(cfg.L, "L");
  sk.master_seed = require(cfg.master_seed, "master_seed");
  sk.dist = sketch_dist(cfg, p, m, variance);

  SketchStats stats;
  const SketchedDataset data =
      sketch_blocks(X, partition_even(X.cols(), sk.blocks), sk, &stats);
  const fs::path dir = resolve_output(output, cfg);
  save_sketched_dataset(data, dir);
  std::cout << "sketched " << X.cols() << " samples into " << sk.blocks
            << " blocks of dimension " << m << " ("
            << stats.multiply_adds << " multiply-adds, " << stats.stored_reals
            << " stored reals)\n";
  if (sk.dist.is_sparse_bernoulli())
    std::cout << "compression factor m/s = "
              << format_g17(compression_factor(sk)) << "\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& input,
              const std::string& output, const std::string& true_dict_path) {
  const ExperimentConfig cfg = load_experiment_config(config_path);
  const std::string method = single_method(cfg);
  if (method == "kmeans")
    throw ConfigError("method kmeans has its own subcommand");

  const fs::path dir = resolve_output(output, cfg);
  fs::create_directories(dir);
  std::optional<Matrix> truth;
  if (!true_dict_path.empty()) truth = read_matrix(true_dict_path);

  std::vector<double> recovery;
  const IterationObserver observer = [&](const IterationInfo& info) {
    if (truth)
      recovery.push_back(
          match_atoms(info.dictionary, *truth).recovered_fraction);
  };

  TrainResult result;
  double gamma = kNaN;
  if (method == "cksvd") {
    const SketchedDataset data = load_sketched_dataset(input);
    TrainConfig tc;
    tc.sparsity = require(cfg.T, "T");
    tc.iterations = require(cfg.iterations, "iterations");
    tc.delayed_refit = cfg.delayed_refit.value_or(false);
    tc.ridge = cfg.ridge.value_or(0.0);
    tc.seed = require(cfg.master_seed, "master_seed");
    if (data.source.dist().is_sparse_bernoulli())
      gamma = compression_factor(data.m, data.source.dist());
    result = train(data, require(cfg.K, "K"), tc, nullptr,
                   truth ? observer : IterationObserver{});
  } else {
    const Matrix X = read_matrix(input);
    result = aksvd_train(X, require(cfg.K, "K"), require(cfg.T, "T"),
                         require(cfg.iterations, "iterations"),
                         require(cfg.master_seed, "master_seed"), nullptr,
                         truth ? observer : IterationObserver{});
  }

  write_matrix(dir / "dictionary.cdlm", result.dictionary);
  write_history(dir / "history.csv", method, gamma, result.history.objective,
                result.history.seconds, recovery);
  std::cout << "trained " << method << " for "
            << result.history.objective.size() << " iterations; final objective "
            << format_g17(result.history.objective.back()) << "\n";
  if (!recovery.empty())
    std::cout << "final recovery " << format_g17(recovery.back()) << "\n";
  return 0;
}

int cmd_kmeans(const std::string& config_path, const std::string& input,
               const std::string& output) {
  const ExperimentConfig cfg = load_experiment_config(config_path);
  const SketchedDataset data = load_sketched_dataset(input);
  const KMeansResult result =
      kmeans_train(data, require(cfg.K, "K"), require(cfg.iterations, "iterations"),
                   require(cfg.master_seed, "master_seed"));

  const fs::path dir = resolve_output(output, cfg);
  fs::create_directories(dir);
  write_matrix(dir / "centers.cdlm", result.centers);
  Matrix assign(1, Index(result.assignments.size()));
  for (std::size_t i = 0; i < result.assignments.size(); ++i)
    assign(0, Index(i)) = double(result.assignments[i]);
  write_matrix(dir / "assignments.cdlm", assign);
  const double gamma = data.source.dist().is_sparse_bernoulli()
                           ? compression_factor(data.m, data.source.dist())
                           : kNaN;
  write_history(dir / "history.csv", "kmeans", gamma, result.history.objective,
                result.history.seconds, {});
  std::cout << "clustered " << data.total_samples() << " samples into "
            << result.centers.cols() << " centers; final objective "
            << format_g17(result.history.objective.back()) << "\n";
  return 0;
}

struct TheoryArgs {
  Index p = 0, m = 0;
  Index cluster_size = 0;
  std::vector<Index> cluster_sizes;
  double kappa = std::numeric_limits<double>::quiet_NaN();
  std::string dist_name;
  double s = 0.0;
  double variance = 1.0;
  double p0 = 0.0;
  double eta = 0.0;
  double snr = 0.0;
  std::string mc;  // "", "hk", "fk"
  int trials = 200;
  std::uint64_t seed = 1;
  std::string output;
  int threads = 0;
};

int cmd_theory(const TheoryArgs& a) {
  // kurtosis either direct or through the distribution
  double kappa = a.kappa;
  std::optional<ProjectionDistribution> dist;
  if (!a.dist_name.empty()) {
    dist = ProjectionDistribution::parse(
        a.dist_name, a.dist_name == "gaussian" ? a.variance : a.s);
    kappa = moments(*dist).kurtosis;
  }
  if (std::isnan(kappa))
    throw ConfigError("need --kappa or --dist (with --s / --variance)");

  if (!a.mc.empty()) {
    if (!dist) throw ConfigError("Monte Carlo runs need --dist");
    if (!(a.p0 > 0.0)) throw ConfigError("Monte Carlo runs need --p0");
    std::vector<Index> sizes = a.cluster_sizes;
    if (sizes.empty()) {
      if (a.cluster_size < 1)
        throw ConfigError("--mc needs --cluster-sizes or --cluster-size");
      sizes.push_back(a.cluster_size);
    }
    const int threads = a.threads > 0 ? a.threads : default_threads();
    MonteCarloReport report;
    if (a.mc == "hk") {
      report = monte_carlo_hk(*dist, a.p, a.m, sizes, a.p0, a.trials, a.seed,
                              threads);
    } else if (a.mc == "fk") {
      if (!(a.snr > 0.0)) throw ConfigError("--mc fk needs --snr");
      report = monte_carlo_fk(*dist, a.p, a.m, sizes, a.snr, a.p0, a.trials,
                              a.seed, threads);
    } else {
      throw ConfigError("--mc must be hk or fk");
    }
    if (a.output.empty()) {
      write_report_csv(std::cout, report);
    } else {
      std::ofstream out(a.output);
      if (!out) throw IoError("cannot write " + a.output);
      write_report_csv(out, report);
      std::cout << "wrote " << report.cells.size() << " cells to " << a.output
                << "\n";
    }
    return 0;
  }

  if (a.cluster_size < 1)
    throw ConfigError("bound evaluation needs --cluster-size");
  if (a.p0 > 0.0) {
    const double eta = eta_for_p0(a.p0, a.p, a.m, a.cluster_size, kappa);
    std::printf("eta = %.6g\n", eta);
  } else if (a.eta > 0.0) {
    const double p0 = p0_bound(a.p, a.m, a.cluster_size, kappa, a.eta);
    std::printf("p0 = %.6g\n", p0);
    if (a.snr > 0.0) {
      const double p1 = p1_bound(a.p, a.m, a.cluster_size, kappa, a.eta, a.snr);
      std::printf("p1 = %.6g\n", p1);
    }
  } else {
    throw ConfigError("pass --p0 (solve for eta) or --eta (evaluate bounds)");
  }
  return 0;
}

int cmd_bench(const std::string& config_path, const std::string& output,
              int threads) {
  const ExperimentConfig cfg = load_experiment_config(config_path);
  const fs::path out_path = resolve_output(output, cfg);
  const auto rows =
      run_experiment(cfg, threads > 0 ? threads : default_threads());
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  std::ofstream out(out_path);
  if (!out) throw IoError("cannot write " + out_path.string());
  write_result_csv(out, rows);
  if (!out) throw IoError("write failed: " + out_path.string());
  std::cout << "wrote " << rows.size() << " rows to " << out_path.string()
            << "\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"dictionary learning from compressive sketches"};
  app.require_subcommand(1);

  std::string config_path, input, output, true_dict;
  double variance = 0.0;
  int threads = 0;

  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  gen->add_option("--config", config_path, "experiment config")->required();
  gen->add_option("--output", output, "output directory");

  auto* sketch = app.add_subcommand("sketch", "compress a dataset blockwise");
  sketch->add_option("--config", config_path, "experiment config")->required();
  sketch->add_option("--input", input, "sample matrix file")->required();
  sketch->add_option("--output", output, "output directory");
  sketch->add_option("--variance", variance,
                     "gaussian entry variance (default 1/p)");

  auto* train = app.add_subcommand("train", "learn a dictionary");
  train->add_option("--config", config_path, "experiment config")->required();
  train->add_option("--input", input,
                    "sketch directory (cksvd) or sample matrix (aksvd)")
      ->required();
  train->add_option("--output", output, "output directory");
  train->add_option("--true-dict", true_dict,
                    "ground-truth dictionary for recovery tracking");

  auto* kmeans = app.add_subcommand("kmeans", "cluster sketched samples");
  kmeans->add_option("--config", config_path, "experiment config")->required();
  kmeans->add_option("--input", input, "sketch directory")->required();
  kmeans->add_option("--output", output, "output directory");

  TheoryArgs ta;
  auto* theory =
      app.add_subcommand("theory", "deviation bounds and Monte Carlo checks");
  theory->add_option("--p", ta.p, "ambient dimension")->required();
  theory->add_option("--m", ta.m, "sketch dimension")->required();
  theory->add_option("--cluster-size", ta.cluster_size, "samples per cluster");
  theory->add_option("--cluster-sizes", ta.cluster_sizes,
                     "cluster size sweep for --mc");
  theory->add_option("--kappa", ta.kappa, "entry excess kurtosis");
  theory->add_option("--dist", ta.dist_name, "gaussian | sparse_bernoulli");
  theory->add_option("--s", ta.s, "sparse-bernoulli parameter");
  theory->add_option("--variance", ta.variance, "gaussian variance");
  theory->add_option("--p0", ta.p0, "target bound value (solves for eta)");
  theory->add_option("--eta", ta.eta, "deviation threshold");
  theory->add_option("--snr", ta.snr, "signal-to-noise ratio for p1 / fk");
  theory->add_option("--mc", ta.mc, "Monte Carlo mode: hk or fk");
  theory->add_option("--trials", ta.trials, "Monte Carlo trials per cell");
  theory->add_option("--seed", ta.seed, "Monte Carlo seed");
  theory->add_option("--output", ta.output, "CSV destination (default stdout)");
  theory->add_option("--threads", ta.threads, "worker threads");

  auto* bench = app.add_subcommand("bench", "synthetic recovery benchmark");
  bench->add_option("--config", config_path, "experiment config")->required();
  bench->add_option("--output", output, "CSV destination");
  bench->add_option("--threads", threads, "worker threads");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) return cmd_gen(config_path, output);
    if (sketch->parsed()) return cmd_sketch(config_path, input, output, variance);
    if (train->parsed()) return cmd_train(config_path, input, output, true_dict);
    if (kmeans->parsed()) return cmd_kmeans(config_path, input, output);
    if (theory->parsed()) return cmd_theory(ta);
    if (bench->parsed()) return cmd_bench(config_path, output, threads);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  args.reserve(std::size_t(argc > 0 ? argc - 1 : 0));
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args);
}

}  // namespace cdl
