#include "cdl/synth.hpp"

#include <algorithm>
#include <cmath>

#include "cdl/rng.hpp"

namespace cdl {

SyntheticData generate_synthetic(const SyntheticConfig& cfg) {
  if (cfg.p < 1 || cfg.K < 1 || cfg.n < 1)
    throw ConfigError("generate_synthetic: p, K and n must be >= 1");
  if (cfg.sparsity < 1 || Index(cfg.sparsity) > cfg.K)
    throw ConfigError("generate_synthetic: sparsity must be in [1, K]");
  if (!(cfg.coeff_std > 0.0) || !(cfg.noise_var >= 0.0))
    throw ConfigError("generate_synthetic: bad coefficient/noise parameters");

  Rng rng(cfg.seed);
  SyntheticData data;

  data.dictionary.resize(cfg.p, cfg.K);
  for (Index k = 0; k < cfg.K; ++k) {
    double norm2 = 0.0;
    do {
      for (Index i = 0; i < cfg.p; ++i)
        data.dictionary(i, k) = 2.0 * rng.uniform01() - 1.0;
      norm2 = data.dictionary.col(k).squaredNorm();
    } while (norm2 == 0.0);
    data.dictionary.col(k) /= std::sqrt(norm2);
  }

  data.X.resize(cfg.p, cfg.n);
  data.codes = SparseCodeBlock(cfg.n, cfg.sparsity);
  const double noise_std = std::sqrt(cfg.noise_var);

  std::vector<int> pool(std::size_t(cfg.K));
  SparseCode code;
  for (Index i = 0; i < cfg.n; ++i) {
    // distinct atoms via a partial Fisher-Yates shuffle
    for (Index k = 0; k < cfg.K; ++k) pool[std::size_t(k)] = int(k);
    code.support.clear();
    code.values.clear();
    for (int t = 0; t < cfg.sparsity; ++t) {
      const std::size_t pick =
          std::size_t(t) + std::size_t(rng.below(std::uint64_t(cfg.K - t)));
      std::swap(pool[std::size_t(t)], pool[pick]);
      code.support.push_back(pool[std::size_t(t)]);
      code.values.push_back(cfg.unit_coefficients ? 1.0
                                                  : cfg.coeff_std * rng.normal());
    }
    // keep supports sorted (the storage convention everywhere else)
    for (int a = 1; a < cfg.sparsity; ++a)
      for (int b = a; b > 0 && code.support[b - 1] > code.support[b]; --b) {
        std::swap(code.support[b - 1], code.support[b]);
        std::swap(code.values[b - 1], code.values[b]);
      }

    auto x = data.X.col(i);
    x.setZero();
    for (int t = 0; t < cfg.sparsity; ++t)
      x.noalias() += code.values[std::size_t(t)] *
                     data.dictionary.col(code.support[std::size_t(t)]);
    if (noise_std > 0.0)
      for (Index r = 0; r < cfg.p; ++r) x[r] += noise_std * rng.normal();
    data.codes.assign(i, code);
  }
  return data;
}

RecoveryScore match_atoms(const Matrix& learned, const Matrix& truth,
                          double threshold) {
  if (learned.rows() != truth.rows())
    throw DimensionError("match_atoms: dimension mismatch");
  const Index Kl = learned.cols(), Kt = truth.cols();
  if (Kl < 1 || Kt < 1) throw DimensionError("match_atoms: empty dictionary");

  Matrix M = (learned.transpose() * truth).cwiseAbs();  // Kl x Kt
  RecoveryScore score;
  score.threshold = threshold;
  std::vector<char> used_l(std::size_t(Kl), 0), used_t(std::size_t(Kt), 0);
  const Index pairs = std::min(Kl, Kt);

  for (Index step = 0; step < pairs; ++step) {
    // global argmax over unmatched rows/columns; ties resolve to the lowest
    // (learned, true) pair because only strictly larger values win
    Index best_l = -1, best_t = -1;
    double best = -1.0;
    for (Index l = 0; l < Kl; ++l) {
      if (used_l[std::size_t(l)]) continue;
      for (Index t = 0; t < Kt; ++t) {
        if (used_t[std::size_t(t)]) continue;
        if (M(l, t) > best) {
          best = M(l, t);
          best_l = l;
          best_t = t;
        }
      }
    }
    used_l[std::size_t(best_l)] = 1;
    used_t[std::size_t(best_t)] = 1;
    score.matched_pairs.emplace_back(int(best_l), int(best_t));
    score.coherences.push_back(best);
  }

  int recovered = 0;
  for (double c : score.coherences)
    if (c > threshold) ++recovered;
  score.recovered_fraction = double(recovered) / double(Kt);
  return score;
}

}  // namespace cdl
