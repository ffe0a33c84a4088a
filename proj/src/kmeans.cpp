#include "cdl/kmeans.hpp"

#include <chrono>
#include <cmath>

#include "cdl/distribution.hpp"
#include "cdl/rng.hpp"

namespace cdl {

namespace {

double assignment_objective(const SketchedDataset& data,
                            const std::vector<Matrix>& psis,
                            const std::vector<int>& assignments) {
  double total = 0.0;
  for (std::size_t l = 0; l < data.blocks.size(); ++l) {
    const Matrix& Y = data.blocks[l];
    const Index base = data.partition.block_begin(Index(l));
    for (Index i = 0; i < Y.cols(); ++i)
      total +=
          (Y.col(i) - psis[l].col(assignments[std::size_t(base + i)]))
              .squaredNorm();
  }
  return total;
}

}  // namespace

KMeansResult kmeans_train(const SketchedDataset& data, Index K, int iterations,
                          std::uint64_t seed,
                          const IterationObserver& observer) {
  const Index n = data.total_samples();
  if (K < 1) throw ConfigError("kmeans_train: K must be >= 1");
  if (K > n)
    throw ConfigError("kmeans_train: more clusters than samples (" +
                      std::to_string(K) + " > " + std::to_string(n) + ")");
  if (iterations < 1) throw ConfigError("kmeans_train: iterations must be >= 1");

  const auto t0 = std::chrono::steady_clock::now();
  const Index L = data.partition.blocks();
  const Index p = data.p;
  const Index m = data.m;
  const bool dense_gram = p <= 2048;
  BlockMatrixAccess access(data.source, L);
  const double scale = expected_gram_scale(data.source.dist(), m);

  Matrix C = random_unit_dictionary(p, K, mix_seed(seed, 0));
  KMeansResult result;
  result.assignments.assign(std::size_t(n), 0);
  std::vector<Matrix> psis(static_cast<std::size_t>(L));

  for (int iter = 1; iter <= iterations; ++iter) {
    // --- assignment ------------------------------------------------------
    for (Index l = 0; l < L; ++l) {
      const ProjectionMatrix& R = access.get(l);
      psis[std::size_t(l)] = R.sketch(C);  // m x K
      const Matrix& psi = psis[std::size_t(l)];
      const Vector norms2 = psi.colwise().squaredNorm();
      const Matrix& Y = data.blocks[std::size_t(l)];
      const Matrix scores = psi.transpose() * Y;  // K x n_l
      const Index base = data.partition.block_begin(l);
      for (Index i = 0; i < Y.cols(); ++i) {
        int best = 0;
        double best_val = norms2[0] - 2.0 * scores(0, i);
        for (Index k = 1; k < K; ++k) {
          const double val = norms2[k] - 2.0 * scores(k, i);
          if (val < best_val) {
            best_val = val;
            best = int(k);
          }
        }
        result.assignments[std::size_t(base + i)] = best;
      }
    }

    // --- center updates --------------------------------------------------
    // Per-cluster member counts and sketch sums, gathered per block.
    Matrix counts = Matrix::Zero(L, K);
    std::vector<Matrix> sums(static_cast<std::size_t>(L));
    for (Index l = 0; l < L; ++l) {
      sums[std::size_t(l)] = Matrix::Zero(m, K);
      const Matrix& Y = data.blocks[std::size_t(l)];
      const Index base = data.partition.block_begin(l);
      for (Index i = 0; i < Y.cols(); ++i) {
        const int k = result.assignments[std::size_t(base + i)];
        counts(l, k) += 1.0;
        sums[std::size_t(l)].col(k) += Y.col(i);
      }
    }

    for (Index k = 0; k < K; ++k) {
      const double members = counts.col(k).sum();
      if (members == 0.0) {
        // reseed from the back-projection of a random sample
        Rng rng(mix_seed(seed, 0x9e3779b9u + std::uint64_t(iter) *
                                   std::uint64_t(K) + std::uint64_t(k)));
        const Index i = Index(rng.below(std::uint64_t(n)));
        const Index l = data.partition.block_of(i);
        const Index local = i - data.partition.block_begin(l);
        C.col(k) = access.get(l).apply(
                       data.blocks[std::size_t(l)].col(local)) /
                   scale;
        continue;
      }
      const double norm = scale * members;
      Vector f = Vector::Zero(p);
      for (Index l = 0; l < L; ++l)
        if (counts(l, k) > 0.0)
          f.noalias() += access.get(l).apply(sums[std::size_t(l)].col(k));
      f /= norm;

      if (dense_gram) {
        Matrix H = Matrix::Zero(p, p);
        for (Index l = 0; l < L; ++l)
          if (counts(l, k) > 0.0)
            access.get(l).add_weighted_gram_lower(H, counts(l, k) / norm);
        symmetrize_from_lower(H);
        C.col(k) = solve_psd_system(H, f);
      } else {
        auto apply = [&access, &counts, k, norm, p, L](const Vector& v) {
          Vector out = Vector::Zero(p);
          for (Index l = 0; l < L; ++l) {
            const double w = counts(l, k) / norm;
            if (w == 0.0) continue;
            const ProjectionMatrix& R = access.get(l);
            out.noalias() += w * R.apply(R.apply_transpose(v));
          }
          return out;
        };
        C.col(k) = solve_psd_cg(apply, f);
      }
    }

    // --- bookkeeping -----------------------------------------------------
    for (Index l = 0; l < L; ++l)
      psis[std::size_t(l)] = access.get(l).sketch(C);
    const double objective =
        assignment_objective(data, psis, result.assignments);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    result.history.objective.push_back(objective);
    result.history.seconds.push_back(seconds);
    if (observer)
      observer(IterationInfo{iter, C, objective, seconds, true});
  }

  result.centers = std::move(C);
  return result;
}

}  // namespace cdl
