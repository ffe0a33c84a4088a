#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "cdl/common.hpp"
#include "cdl/sketch.hpp"
#include "cdl/sparse_coding.hpp"

namespace cdl {

struct TrainConfig {
  int sparsity = 1;        // atoms per sample (T)
  int iterations = 1;
  bool delayed_refit = false;  // postpone coefficient refits to a final sweep
  double ridge = 0.0;          // > 0: solve (G + ridge I) d = b instead of pinv
  std::uint64_t seed = 0;      // initial dictionary draw
  bool kmeans_mode = false;    // dispatch flag used by config-driven callers
};

struct TrainHistory {
  std::vector<double> objective;  // sketch-domain residual after each iteration
  std::vector<double> seconds;    // cumulative wall time at each iteration
};

struct TrainResult {
  Matrix dictionary;  // p x K, unit-norm columns
  TrainHistory history;
};

// Per-iteration callback payload. dictionary points at live training state;
// copy whatever must outlive the call.
struct IterationInfo {
  int iteration = 0;  // 1-based
  const Matrix& dictionary;
  double objective = 0.0;
  double seconds = 0.0;
  bool support_preserved = true;  // coding supports untouched by the update phase
};
using IterationObserver = std::function<void(const IterationInfo&)>;

// K columns drawn iid uniform on the unit sphere.
Matrix random_unit_dictionary(Index p, Index K, std::uint64_t seed);

// Flips d so its largest-magnitude entry is positive (first such entry on
// ties). Scale-ambiguous solves use this to pin a representative.
void normalize_atom_sign(Vector& d);

double max_unit_norm_error(const Matrix& D);  // max_k | ||d_k|| - 1 |

// Everything the closed-form update of atom k needs, gathered per block:
// which samples use the atom, their current coefficients on it, and the
// sketch-domain errors e_i = y_i - sum_{j != k} c_ij psi_j.
struct AtomResiduals {
  std::vector<std::vector<Index>> members;  // per block, ascending sample ids
  std::vector<Matrix> errors;               // per block, m x members
  std::vector<Vector> coeffs;               // per block, c_ik in member order

  bool empty() const noexcept {
    for (const auto& v : members)
      if (!v.empty()) return false;
    return true;
  }
};

AtomResiduals residuals_for_atom(int k, const std::vector<Matrix>& sketches,
                                 const std::vector<Matrix>& psis,
                                 const std::vector<SparseCodeBlock>& codes);

// Normal equations of the atom-k subproblem: G_k = sum_l w_l R_l R_l^T with
// block weights w_l = sum_i c_ik^2, and b_k = sum_l R_l (E_l c_l). When
// dense_gram is false only the weights and a matrix-free G_k-apply are kept
// (the closure borrows `access`, which must outlive the system).
struct AtomUpdateSystem {
  int atom = -1;
  Matrix gram;  // p x p, full symmetric; empty in matrix-free form
  Vector rhs;
  std::vector<double> block_weights;
  bool empty = true;
  std::function<Vector(const Vector&)> gram_apply;
};

AtomUpdateSystem build_atom_system(int k, const AtomResiduals& residuals,
                                   const BlockMatrixAccess& access,
                                   bool dense_gram = true);

// Symmetric PSD solve used by all closed-form updates. ridge == 0 applies a
// truncated pseudo-inverse dropping eigenvalues <= truncation * lambda_max
// (with a verified Cholesky fast path); ridge > 0 solves (G + ridge I) x = b.
Vector solve_psd_system(const Matrix& G, const Vector& b, double ridge = 0.0,
                        double truncation = 1e-10);

// Conjugate-gradient variant for the matrix-free form. Starting from 0 keeps
// iterates inside range(G), so consistent singular systems converge to the
// minimum-norm (pseudo-inverse) solution.
Vector solve_psd_cg(const std::function<Vector(const Vector&)>& apply_gram,
                    const Vector& b, double rel_tol = 1e-12,
                    Index max_iterations = 0);

struct AtomSolveResult {
  Vector atom;                     // unit norm, sign-normalized
  bool needs_replacement = false;  // empty system, b = 0, or zero solution
};

AtomSolveResult solve_atom(const AtomUpdateSystem& system, double ridge = 0.0,
                           double truncation = 1e-10);

// Re-fits the coefficients of atom k for every member sample:
// c_ik = <e_i, R_l^T d> / ||R_l^T d||^2. Returns false (and zeroes the
// affected coefficients) if some block's projected atom vanishes.
bool refit_coefficients(int k, const Vector& d, const AtomResiduals& residuals,
                        const BlockMatrixAccess& access,
                        std::vector<SparseCodeBlock>& codes);

// Dictionary learning from sketched data: alternates batch pursuit on each
// block's equivalent dictionary with the closed-form per-atom updates above.
// Unused atoms are replaced by the back-projection of the worst-coded sample.
TrainResult train(const SketchedDataset& data, Index K, const TrainConfig& cfg,
                  const Matrix* initial = nullptr,
                  const IterationObserver& observer = {});

}  // namespace cdl
