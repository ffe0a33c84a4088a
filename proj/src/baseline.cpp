#include "cdl/baseline.hpp"

#include <chrono>
#include <cmath>
#include <set>
#include <utility>

#include "cdl/sparse_coding.hpp"

namespace cdl {

namespace {

double coding_objective(const Matrix& X, const Matrix& D,
                        const SparseCodeBlock& codes) {
  double total = 0.0;
  Vector e;
  for (Index i = 0; i < X.cols(); ++i) {
    e = X.col(i);
    for (int t = 0; t < codes.count(i); ++t)
      e.noalias() -= codes.value(i, t) * D.col(codes.atom(i, t));
    total += e.squaredNorm();
  }
  return total;
}

// Largest-residual sample not yet consumed this iteration, normalized.
bool replace_atom(const Matrix& X, const Matrix& D, const SparseCodeBlock& codes,
                  std::set<Index>& used, Vector* atom) {
  Vector e;
  while (true) {
    double best = -1.0;
    Index best_i = -1;
    for (Index i = 0; i < X.cols(); ++i) {
      if (used.count(i)) continue;
      e = X.col(i);
      for (int t = 0; t < codes.count(i); ++t)
        e.noalias() -= codes.value(i, t) * D.col(codes.atom(i, t));
      const double r2 = e.squaredNorm();
      if (r2 > best) {
        best = r2;
        best_i = i;
      }
    }
    if (best_i < 0 || !(best > 0.0)) return false;
    used.insert(best_i);
    e = X.col(best_i);
    for (int t = 0; t < codes.count(best_i); ++t)
      e.noalias() -= codes.value(best_i, t) * D.col(codes.atom(best_i, t));
    const double norm = e.norm();
    if (norm > 0.0 && e.allFinite()) {
      *atom = e / norm;
      return true;
    }
  }
}

}  // namespace

TrainResult aksvd_train(const Matrix& X, Index K, int sparsity, int iterations,
                        std::uint64_t seed, const Matrix* initial,
                        const IterationObserver& observer) {
  if (K < 1) throw ConfigError("aksvd_train: K must be >= 1");
  if (sparsity < 1) throw ConfigError("aksvd_train: sparsity must be >= 1");
  if (iterations < 1) throw ConfigError("aksvd_train: iterations must be >= 1");
  if (X.cols() < 1) throw DimensionError("aksvd_train: no samples");

  const auto t0 = std::chrono::steady_clock::now();
  const Index p = X.rows();
  Matrix D;
  if (initial) {
    if (initial->rows() != p || initial->cols() != K)
      throw DimensionError("aksvd_train: initial dictionary must be p x K");
    D = *initial;
    for (Index k = 0; k < K; ++k) {
      const double norm = D.col(k).norm();
      if (!(norm > 0.0))
        throw ConfigError("aksvd_train: initial atom has zero norm");
      D.col(k) /= norm;
    }
  } else {
    D = random_unit_dictionary(p, K, seed);
  }

  TrainResult result;
  std::vector<Index> members;
  for (int iter = 1; iter <= iterations; ++iter) {
    SparseCodeBlock codes =
        batch_omp_block(X, plain_dictionary(D, /*with_gram=*/true), sparsity);

    std::set<Index> used_for_replacement;
    for (Index k = 0; k < K; ++k) {
      members.clear();
      for (Index i = 0; i < X.cols(); ++i)
        if (codes.slot_of(i, int(k)) >= 0) members.push_back(i);

      if (members.empty()) {
        Vector fresh;
        if (replace_atom(X, D, codes, used_for_replacement, &fresh))
          D.col(k) = fresh;
        continue;
      }

      // E = restricted error with atom k's contribution put back
      Matrix E(p, Index(members.size()));
      Vector g(Index(members.size()));
      for (std::size_t t = 0; t < members.size(); ++t) {
        const Index i = members[t];
        auto e = E.col(Index(t));
        e = X.col(i);
        for (int slot = 0; slot < codes.count(i); ++slot) {
          const int j = codes.atom(i, slot);
          if (j == int(k)) continue;
          e.noalias() -= codes.value(i, slot) * D.col(j);
        }
      }

      // one power iteration toward the leading singular pair of E
      for (std::size_t t = 0; t < members.size(); ++t)
        g[Index(t)] = codes.value(members[t], codes.slot_of(members[t], int(k)));
      Vector d = E * g;
      const double norm = d.norm();
      if (!(norm > 0.0) || !d.allFinite()) {
        Vector fresh;
        if (replace_atom(X, D, codes, used_for_replacement, &fresh))
          D.col(k) = fresh;
        continue;
      }
      d /= norm;
      D.col(k) = d;
      g.noalias() = E.transpose() * d;
      for (std::size_t t = 0; t < members.size(); ++t)
        codes.set_value(members[t], codes.slot_of(members[t], int(k)),
                        g[Index(t)]);
    }

    const double objective = coding_objective(X, D, codes);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    result.history.objective.push_back(objective);
    result.history.seconds.push_back(seconds);
    if (observer) observer(IterationInfo{iter, D, objective, seconds, true});
  }

  result.dictionary = std::move(D);
  return result;
}

}  // namespace cdl
