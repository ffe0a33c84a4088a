#pragma once

#include <string>

#include "cdl/common.hpp"

namespace cdl {

enum class DistKind { Gaussian, SparseBernoulli };

// Entry law of a projection matrix: zero-mean Gaussian with a given variance,
// or the sparse sign law on {-1, 0, +1} with probabilities
// {1/(2s), 1 - 1/s, 1/(2s)} for sparsity parameter s >= 1.
class ProjectionDistribution {
public:
  static ProjectionDistribution gaussian(double variance);
  static ProjectionDistribution sparse_bernoulli(double s);

  // name in {"gaussian", "sparse_bernoulli"}; parameter is the variance or s.
  static ProjectionDistribution parse(const std::string& name, double parameter);

  DistKind kind() const noexcept { return kind_; }
  bool is_sparse_bernoulli() const noexcept {
    return kind_ == DistKind::SparseBernoulli;
  }

  double variance() const;  // Gaussian only
  double s() const;         // sparse-Bernoulli only
  double parameter() const noexcept { return param_; }
  std::string name() const;

private:
  ProjectionDistribution(DistKind kind, double param) noexcept
      : kind_(kind), param_(param) {}

  DistKind kind_;
  double param_;
};

struct Moments {
  double mu2;       // E[r^2]
  double mu4;       // E[r^4]
  double kurtosis;  // mu4 / mu2^2 - 3
};

Moments moments(const ProjectionDistribution& dist);

// E[R R^T] = m * mu2 * I for a p x m matrix with iid entries.
double expected_gram_scale(const ProjectionDistribution& dist, Index m);

}  // namespace cdl
