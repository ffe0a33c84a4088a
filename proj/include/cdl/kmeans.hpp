#pragma once

#include <cstdint>
#include <vector>

#include "cdl/cksvd.hpp"
#include "cdl/common.hpp"
#include "cdl/sketch.hpp"

namespace cdl {

struct KMeansResult {
  Matrix centers;                 // p x K, not normalized
  std::vector<int> assignments;   // one cluster id per sample
  TrainHistory history;           // sketch-domain objective per iteration
};

// Lloyd-style clustering on sketched data: assignment minimizes
// ||y_i - R_l^T c_k||^2 (ties -> lowest k), and each center solves
// H_k c = f_k with H_k = sum R_l R_l^T / (m mu2 |I_k|) counted over members
// and f_k the matching back-projected mean. With m = p and identity
// projections this reduces exactly to Lloyd's algorithm. Empty clusters are
// reseeded from the back-projection of a random sample.
KMeansResult kmeans_train(const SketchedDataset& data, Index K, int iterations,
                          std::uint64_t seed,
                          const IterationObserver& observer = {});

}  // namespace cdl
