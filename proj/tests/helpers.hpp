#pragma once

// Independent reference implementations the tests compare against. These
// deliberately use different algorithms (dense QR, explicit SVD, full
// rescans) than the library paths they check.

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "cdl/cksvd.hpp"
#include "cdl/rng.hpp"
#include "cdl/sketch.hpp"
#include "cdl/sparse_coding.hpp"

namespace cdl::testing {

inline Matrix random_matrix(Index rows, Index cols, std::uint64_t seed,
                            double scale = 1.0) {
  Rng rng(seed);
  Matrix M(rows, cols);
  rng.fill_normal(M.data(), std::size_t(M.size()));
  return scale * M;
}

inline Vector random_vector(Index n, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  Vector v(n);
  rng.fill_normal(v.data(), std::size_t(n));
  return scale * v;
}

// Step-by-step pursuit with the library's selection rule but a fresh dense
// QR solve at every step instead of a progressive factorization.
inline SparseCode naive_omp(const Vector& y, const EquivalentDictionary& dict,
                            int sparsity) {
  const Index K = dict.atoms();
  SparseCode out;
  out.residual_norms.push_back(y.norm());

  const double max_norm = dict.column_norms.maxCoeff();
  std::vector<char> usable(std::size_t(K), 0);
  bool any_usable = false;
  for (Index j = 0; j < K; ++j) {
    usable[std::size_t(j)] = dict.column_norms[j] > kAtomNormTol * max_norm;
    any_usable |= bool(usable[std::size_t(j)]);
  }
  if (!any_usable) {
    out.degenerate = true;
    return out;
  }

  std::vector<int> picked;
  Vector r = y;
  Vector coef;
  while (int(picked.size()) < sparsity &&
         r.norm() > kResidualTol * y.norm()) {
    int best = -1;
    double best_score = -1.0;
    for (Index j = 0; j < K; ++j) {
      if (!usable[std::size_t(j)]) continue;
      if (std::find(picked.begin(), picked.end(), int(j)) != picked.end())
        continue;
      const double score =
          std::abs(r.dot(dict.psi.col(j))) / dict.column_norms[j];
      if (score > best_score) {
        best_score = score;
        best = int(j);
      }
    }
    if (best < 0) break;

    // linear-dependence guard, via an explicit projection onto the span
    if (!picked.empty()) {
      Matrix S(dict.dim(), Index(picked.size()));
      for (std::size_t t = 0; t < picked.size(); ++t)
        S.col(Index(t)) = dict.psi.col(picked[t]);
      const Vector c = dict.psi.col(best);
      const Vector proj =
          S * S.colPivHouseholderQr().solve(c);
      if ((c - proj).squaredNorm() <= kDependentTol * c.squaredNorm()) break;
    }

    picked.push_back(best);
    Matrix S(dict.dim(), Index(picked.size()));
    for (std::size_t t = 0; t < picked.size(); ++t)
      S.col(Index(t)) = dict.psi.col(picked[t]);
    coef = S.colPivHouseholderQr().solve(y);
    r = y - S * coef;
    out.residual_norms.push_back(r.norm());
  }

  std::vector<std::size_t> order(picked.size());
  for (std::size_t t = 0; t < order.size(); ++t) order[t] = t;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return picked[a] < picked[b];
  });
  for (std::size_t t : order) {
    out.support.push_back(picked[t]);
    out.values.push_back(coef[Index(t)]);
  }
  return out;
}

// Minimum-norm least-squares solution via a dense SVD, dropping singular
// values <= cutoff * sigma_max.
inline Vector svd_pinv_solve(const Matrix& G, const Vector& b,
                             double cutoff = 1e-10) {
  Eigen::JacobiSVD<Matrix> svd(G, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double thresh = cutoff * (sv.size() > 0 ? sv[0] : 0.0);
  Vector z = svd.matrixU().transpose() * b;
  for (Index i = 0; i < sv.size(); ++i)
    z[i] = sv[i] > thresh ? z[i] / sv[i] : 0.0;
  return svd.matrixV() * z;
}

// Classical Lloyd iterations; ties go to the lowest center index. Returns
// per-iteration centers and assignments. Asserts no cluster goes empty by
// leaving empty clusters in place (callers pick data where that never
// happens and verify counts).
struct LloydTrace {
  std::vector<Matrix> centers;                   // after each iteration
  std::vector<std::vector<Index>> assignments;   // per iteration
  std::vector<double> objective;                 // sum of squared distances
  bool had_empty = false;
};

inline LloydTrace naive_lloyd(const Matrix& X, Matrix C, int iterations) {
  const Index n = X.cols(), K = C.cols();
  LloydTrace trace;
  for (int it = 0; it < iterations; ++it) {
    std::vector<Index> assign(std::size_t(n), 0);
    for (Index i = 0; i < n; ++i) {
      Index best = 0;
      double best_d = (X.col(i) - C.col(0)).squaredNorm();
      for (Index k = 1; k < K; ++k) {
        const double d = (X.col(i) - C.col(k)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = k;
        }
      }
      assign[std::size_t(i)] = best;
    }
    for (Index k = 0; k < K; ++k) {
      Vector sum = Vector::Zero(X.rows());
      Index count = 0;
      for (Index i = 0; i < n; ++i)
        if (assign[std::size_t(i)] == k) {
          sum += X.col(i);
          ++count;
        }
      if (count > 0)
        C.col(k) = sum / double(count);
      else
        trace.had_empty = true;
    }
    double obj = 0.0;
    for (Index i = 0; i < n; ++i)
      obj += (X.col(i) - C.col(assign[std::size_t(i)])).squaredNorm();
    trace.centers.push_back(C);
    trace.assignments.push_back(std::move(assign));
    trace.objective.push_back(obj);
  }
  return trace;
}

// Greedy atom matching, reimplemented with a full O(K^2) rescan per pick.
struct NaiveMatch {
  std::vector<std::pair<Index, Index>> pairs;  // (learned, truth)
  std::vector<double> coherences;
  double fraction = 0.0;
};

inline NaiveMatch naive_match(const Matrix& learned, const Matrix& truth,
                              double threshold = 0.95) {
  const Index Kl = learned.cols(), Kt = truth.cols();
  const Matrix C = (learned.transpose() * truth).cwiseAbs();
  std::vector<char> ul(std::size_t(Kl), 0), ut(std::size_t(Kt), 0);
  NaiveMatch out;
  const Index picks = std::min(Kl, Kt);
  Index hits = 0;
  for (Index step = 0; step < picks; ++step) {
    Index bi = -1, bj = -1;
    double best = -1.0;
    for (Index i = 0; i < Kl; ++i) {
      if (ul[std::size_t(i)]) continue;
      for (Index j = 0; j < Kt; ++j) {
        if (ut[std::size_t(j)]) continue;
        if (C(i, j) > best) {
          best = C(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    ul[std::size_t(bi)] = ut[std::size_t(bj)] = 1;
    out.pairs.emplace_back(bi, bj);
    out.coherences.push_back(best);
    if (best > threshold) ++hits;
  }
  out.fraction = double(hits) / double(Kt);
  return out;
}

// Dataset whose "sketches" are the raw samples: L identity projections.
inline SketchedDataset identity_sketch(const Matrix& X, Index L) {
  const Index p = X.rows();
  std::vector<ProjectionMatrix> mats;
  for (Index l = 0; l < L; ++l) mats.push_back(identity_projection(p));
  return sketch_blocks(X, partition_even(X.cols(), L),
                       ProjectionSource::pinned(std::move(mats)));
}

// Sketch-domain objective recomputed from scratch.
inline double naive_objective(const SketchedDataset& data, const Matrix& D,
                              const std::vector<SparseCodeBlock>& codes) {
  BlockMatrixAccess access(data.source, data.partition.blocks());
  double total = 0.0;
  for (Index l = 0; l < data.partition.blocks(); ++l) {
    const Matrix psi = access.get(l).sketch(D);
    const Matrix& Y = data.blocks[std::size_t(l)];
    for (Index i = 0; i < Y.cols(); ++i) {
      Vector r = Y.col(i);
      for (int t = 0; t < codes[std::size_t(l)].count(i); ++t)
        r -= codes[std::size_t(l)].value(i, t) *
             psi.col(codes[std::size_t(l)].atom(i, t));
      total += r.squaredNorm();
    }
  }
  return total;
}

}  // namespace cdl::testing
