#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cdl/common.hpp"

namespace cdl {

// Parsed key=value experiment description. Only a fixed key set is accepted
// (unknown or duplicate keys are config errors); which keys must be present
// depends on what the config is used for, so everything is optional here.
//
//   p, K, n, T          problem shape (dimension, atoms, samples, sparsity)
//   L                   number of sketch blocks
//   m_over_p            sketch size as a fraction of p (m = round(m_over_p*p))
//   dist                gaussian | sparse_bernoulli
//   s                   sparse-Bernoulli parameter (alternative to gamma_list)
//   gamma_list          compression factors m/s, e.g. "1/3,1/5,0.1"
//   iterations, trials  training length and repeat count
//   master_seed         root of every derived random stream
//   method              comma list of cksvd | aksvd | kmeans
//   delayed_refit       true | false
//   ridge               regularized atom solve (0 = pseudo-inverse)
//   output_path         where artifacts go
struct ExperimentConfig {
  std::optional<Index> p, K, n, L;
  std::optional<int> T, iterations, trials;
  std::optional<double> m_over_p, s, ridge;
  std::optional<std::vector<double>> gamma_list;
  std::optional<std::string> dist;
  std::optional<std::uint64_t> master_seed;
  std::optional<std::vector<std::string>> methods;
  std::optional<bool> delayed_refit;
  std::optional<std::string> output_path;
};

ExperimentConfig parse_experiment_config(std::istream& in);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// "1/3" or "0.25" -> double; must be positive and finite.
double parse_fraction(const std::string& text);

// Rounded sketch size; errors if the result is not in [1, p].
Index sketch_size(Index p, double m_over_p);

// One result row of a training run. gamma is NaN when compression does not
// apply (aksvd, or Gaussian sketches).
struct ExperimentRow {
  std::string method;
  double gamma = 0.0;
  int trial = 0;
  int iteration = 0;
  double recovery = 0.0;
  double objective = 0.0;
  double seconds = 0.0;
};

inline constexpr const char* kResultCsvHeader =
    "method,gamma,trial,iteration,recovery,objective,seconds";

void write_result_csv(std::ostream& out, const std::vector<ExperimentRow>& rows);

// Full synthetic benchmark: per trial, generates data, trains every
// configured method (cksvd once per gamma on freshly sketched data, aksvd on
// the raw samples), scores atom recovery against the ground truth each
// iteration, and emits rows ordered by (method, gamma, trial, iteration).
// Work is parallelized over (method, gamma, trial) items, but every random
// stream is derived from master_seed and the item indices, so the CSV is
// identical for any thread count (timing columns aside).
std::vector<ExperimentRow> run_experiment(const ExperimentConfig& cfg,
                                          int threads = 1);

}  // namespace cdl
