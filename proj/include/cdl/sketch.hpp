#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "cdl/common.hpp"
#include "cdl/distribution.hpp"
#include "cdl/partition.hpp"
#include "cdl/projection.hpp"

namespace cdl {

// How to compress a dataset: sketch dimension m, entry law, block count, and
// the master seed from which all block matrices are derived.
struct SketchConfig {
  Index m = 0;
  ProjectionDistribution dist = ProjectionDistribution::gaussian(1.0);
  Index blocks = 1;
  std::uint64_t master_seed = 0;
};

// m/s for sparse-Bernoulli sketches: the fraction of coordinates of a sample
// touched by one block matrix (in expectation). Undefined for Gaussian.
double compression_factor(const SketchConfig& cfg);
double compression_factor(Index m, const ProjectionDistribution& dist);

// Hands out the projection matrix of each block. The default source
// regenerates block l from mix_seed(master_seed, l); a pinned source returns
// caller-supplied matrices instead (tests inject identities through this),
// and materialize() trades regeneration for a cached copy of every block.
class ProjectionSource {
public:
  ProjectionSource(ProjectionDistribution dist, Index p, Index m,
                   std::uint64_t master_seed);
  static ProjectionSource pinned(std::vector<ProjectionMatrix> matrices,
                                 std::uint64_t master_seed = 0);

  ProjectionMatrix matrix_for_block(Index l) const;
  ProjectionSource materialize(Index blocks) const;

  const ProjectionDistribution& dist() const noexcept { return dist_; }
  Index p() const noexcept { return p_; }
  Index m() const noexcept { return m_; }
  std::uint64_t master_seed() const noexcept { return master_seed_; }
  bool is_pinned() const noexcept { return bool(matrices_); }

private:
  ProjectionSource() : dist_(ProjectionDistribution::gaussian(1.0)) {}

  ProjectionDistribution dist_;
  Index p_ = 0;
  Index m_ = 0;
  std::uint64_t master_seed_ = 0;
  std::shared_ptr<const std::vector<ProjectionMatrix>> matrices_;
};

// Sequential access to the block matrices of a source. Sparse matrices (and
// dense ones within the memory budget) are materialized once up front;
// otherwise get() regenerates the requested block into a scratch slot, so
// references stay valid only until the next call.
class BlockMatrixAccess {
public:
  BlockMatrixAccess(const ProjectionSource& source, Index blocks,
                    std::size_t cache_budget_reals = 16u << 20);

  Index blocks() const noexcept { return blocks_; }
  const ProjectionSource& source() const noexcept { return source_; }
  const ProjectionMatrix& get(Index l) const;

private:
  ProjectionSource source_;
  Index blocks_;
  std::vector<ProjectionMatrix> cache_;
  mutable std::optional<ProjectionMatrix> scratch_;
};

// A dataset seen only through per-block sketches Y_l = R_l^T X_l. The
// original samples are gone; source regenerates each R_l on demand.
struct SketchedDataset {
  Index p = 0;
  Index m = 0;
  BlockPartition partition;
  std::vector<Matrix> blocks;  // m x n_l each
  ProjectionSource source{ProjectionDistribution::gaussian(1.0), 1, 1, 0};

  Index total_samples() const noexcept { return partition.total(); }
  std::size_t stored_reals() const noexcept;
};

struct SketchStats {
  std::uint64_t multiply_adds = 0;
  std::uint64_t stored_reals = 0;
};

// Compresses X (samples in columns) blockwise. The overload taking a source
// uses it instead of seeding a fresh one; dimensions must agree with X.
SketchedDataset sketch_blocks(const Matrix& X, const BlockPartition& partition,
                              const SketchConfig& cfg,
                              SketchStats* stats = nullptr);
SketchedDataset sketch_blocks(const Matrix& X, const BlockPartition& partition,
                              const ProjectionSource& source,
                              SketchStats* stats = nullptr);

// Directory layout: manifest.txt (key=value) plus one matrix file per block.
void save_sketched_dataset(const SketchedDataset& data,
                           const std::filesystem::path& dir);
SketchedDataset load_sketched_dataset(const std::filesystem::path& dir);

}  // namespace cdl
