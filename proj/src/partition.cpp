#include "cdl/partition.hpp"

#include <algorithm>

namespace cdl {

Index BlockPartition::block_of(Index i) const {
  if (i < 0 || i >= total()) throw DimensionError("block_of: sample index out of range");
  const auto it = std::upper_bound(boundaries.begin(), boundaries.end(), i);
  return Index(it - boundaries.begin()) - 1;
}

void BlockPartition::validate() const {
  if (boundaries.size() < 2 || boundaries.front() != 0)
    throw DimensionError("partition: boundaries must start at 0");
  for (std::size_t l = 1; l < boundaries.size(); ++l)
    if (boundaries[l] <= boundaries[l - 1])
      throw DimensionError("partition: boundaries must be strictly increasing");
}

BlockPartition partition_even(Index n, Index L) {
  if (L < 1) throw ConfigError("partition_even: need at least one block");
  if (n < L)
    throw ConfigError("partition_even: cannot split " + std::to_string(n) +
                      " samples into " + std::to_string(L) + " blocks");
  BlockPartition part;
  part.boundaries.resize(std::size_t(L) + 1);
  const Index base = n / L, extra = n % L;
  part.boundaries[0] = 0;
  for (Index l = 0; l < L; ++l)
    part.boundaries[std::size_t(l) + 1] =
        part.boundaries[std::size_t(l)] + base + (l < extra ? 1 : 0);
  return part;
}

}  // namespace cdl
