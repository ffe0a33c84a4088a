#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "cdl/common.hpp"
#include "cdl/sparse_coding.hpp"

namespace cdl {

// Synthetic sparse-dictionary data: a ground-truth dictionary with entries
// uniform on [-1, 1] and normalized columns, and samples that combine T
// distinct atoms with N(0, coeff_std^2) coefficients plus iid
// N(0, noise_var) coordinate noise.
struct SyntheticConfig {
  Index p = 0;
  Index K = 0;
  Index n = 0;
  int sparsity = 1;          // atoms per sample
  double coeff_std = 10.0;
  double noise_var = 0.04;
  std::uint64_t seed = 0;
  bool unit_coefficients = false;  // force all coefficients to 1 (cluster data)
};

struct SyntheticData {
  Matrix X;             // p x n
  Matrix dictionary;    // p x K ground truth
  SparseCodeBlock codes;  // true supports and coefficients
};

SyntheticData generate_synthetic(const SyntheticConfig& cfg);

// Greedy one-to-one matching of learned atoms to true atoms by absolute
// inner product (columns of both should be unit norm). An atom counts as
// recovered when its matched coherence exceeds the threshold.
struct RecoveryScore {
  std::vector<std::pair<int, int>> matched_pairs;  // (learned, true)
  std::vector<double> coherences;                  // aligned with pairs
  double recovered_fraction = 0.0;
  double threshold = 0.0;
};

RecoveryScore match_atoms(const Matrix& learned, const Matrix& truth,
                          double threshold = 0.95);

}  // namespace cdl
