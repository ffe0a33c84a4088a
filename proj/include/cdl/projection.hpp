#pragma once

#include <cstdint>
#include <vector>

#include "cdl/common.hpp"
#include "cdl/distribution.hpp"

namespace cdl {

// Column-compressed sign pattern of a sparse-Bernoulli matrix. Row indices
// are strictly increasing within each column and signs are -1 or +1.
struct SparseSignStorage {
  std::vector<std::uint32_t> col_ptr;  // size m + 1
  std::vector<std::uint32_t> row;      // size nnz
  std::vector<std::int8_t> sign;       // size nnz
};

// One p x m random projection matrix R. Gaussian matrices are stored dense;
// sparse-Bernoulli matrices keep only their nonzero pattern. A matrix is
// reproducible bit-for-bit from (dist, p, m, seed) via sample_projection, so
// pipelines regenerate blocks on demand instead of storing them.
class ProjectionMatrix {
public:
  ProjectionMatrix(Matrix dense, ProjectionDistribution dist,
                   std::uint64_t seed);
  ProjectionMatrix(SparseSignStorage storage, Index p, Index m,
                   ProjectionDistribution dist, std::uint64_t seed);

  Index p() const noexcept { return p_; }
  Index m() const noexcept { return m_; }
  bool sparse() const noexcept { return sparse_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const ProjectionDistribution& dist() const noexcept { return dist_; }
  std::size_t nonzeros() const noexcept;

  // Multiply-adds needed to sketch one sample (nnz, or p*m when dense).
  std::uint64_t sketch_cost() const noexcept { return nonzeros(); }

  Vector apply_transpose(const Vector& x) const;  // R^T x, length m
  Matrix sketch(const Matrix& X) const;           // R^T X, samples in columns
  Vector apply(const Vector& v) const;            // R v, length p

  // Accumulates w * R R^T into the lower triangle of G (p x p).
  void add_weighted_gram_lower(Matrix& G, double w) const;

  Matrix dense() const;  // materialized copy
  const SparseSignStorage& sign_storage() const;

private:
  Index p_ = 0;
  Index m_ = 0;
  bool sparse_ = false;
  ProjectionDistribution dist_;
  std::uint64_t seed_ = 0;
  Matrix dense_;              // dense form (empty when sparse)
  SparseSignStorage signs_;   // sparse form (empty when dense)
};

// Draws a fresh p x m matrix with iid entries from dist. The draw order is
// fixed (column-major; sparse columns via geometric gap skipping), so equal
// arguments give bit-identical matrices on every platform.
ProjectionMatrix sample_projection(const ProjectionDistribution& dist, Index p,
                                   Index m, std::uint64_t seed);

// Copies the strict lower triangle onto the upper one.
void symmetrize_from_lower(Matrix& G);

// Dense p x p identity tagged gaussian(1); handy for uncompressed references.
ProjectionMatrix identity_projection(Index p);

}  // namespace cdl
