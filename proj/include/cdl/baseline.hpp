#pragma once

#include <cstdint>

#include "cdl/cksvd.hpp"
#include "cdl/common.hpp"

namespace cdl {

// Uncompressed dictionary learning reference: batch pursuit on D itself,
// then one power-iteration per atom on its restricted error matrix
// (d = E g / ||E g||, g = E^T d), which approximates the rank-one SVD
// update. Trains on raw samples X; serves as the accuracy baseline the
// sketched pipeline is compared against.
TrainResult aksvd_train(const Matrix& X, Index K, int sparsity, int iterations,
                        std::uint64_t seed, const Matrix* initial = nullptr,
                        const IterationObserver& observer = {});

}  // namespace cdl
