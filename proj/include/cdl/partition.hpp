#pragma once

#include <vector>

#include "cdl/common.hpp"

namespace cdl {

// Contiguous split of n samples into L blocks. boundaries holds L + 1
// strictly increasing offsets with boundaries.front() == 0 and
// boundaries.back() == n; block l covers [boundaries[l], boundaries[l+1]).
struct BlockPartition {
  std::vector<Index> boundaries;

  Index blocks() const noexcept { return Index(boundaries.size()) - 1; }
  Index total() const noexcept { return boundaries.back(); }
  Index block_begin(Index l) const { return boundaries.at(std::size_t(l)); }
  Index block_size(Index l) const {
    return boundaries.at(std::size_t(l) + 1) - boundaries.at(std::size_t(l));
  }

  // Index of the block containing sample i.
  Index block_of(Index i) const;

  void validate() const;  // throws DimensionError on malformed boundaries
};

// Splits n samples into L blocks of near-equal size; sizes differ by at most
// one, with the remainder going to the leading blocks (10 into 3 -> 4,3,3).
BlockPartition partition_even(Index n, Index L);

}  // namespace cdl
