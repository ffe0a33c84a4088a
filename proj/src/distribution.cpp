#include "cdl/distribution.hpp"

namespace cdl {

ProjectionDistribution ProjectionDistribution::gaussian(double variance) {
  if (!(variance > 0.0))
    throw ConfigError("gaussian variance must be positive, got " +
                      format_g17(variance));
  return {DistKind::Gaussian, variance};
}

ProjectionDistribution ProjectionDistribution::sparse_bernoulli(double s) {
  if (!(s >= 1.0))
    throw ConfigError("sparse-bernoulli s must be >= 1, got " + format_g17(s));
  return {DistKind::SparseBernoulli, s};
}

ProjectionDistribution ProjectionDistribution::parse(const std::string& name,
                                                     double parameter) {
  if (name == "gaussian") return gaussian(parameter);
  if (name == "sparse_bernoulli") return sparse_bernoulli(parameter);
  throw ConfigError("unknown distribution '" + name +
                    "' (expected gaussian or sparse_bernoulli)");
}

double ProjectionDistribution::variance() const {
  if (kind_ != DistKind::Gaussian)
    throw NotApplicableError("variance() requires a gaussian distribution");
  return param_;
}

double ProjectionDistribution::s() const {
  if (kind_ != DistKind::SparseBernoulli)
    throw NotApplicableError("s() requires a sparse-bernoulli distribution");
  return param_;
}

std::string ProjectionDistribution::name() const {
  return kind_ == DistKind::Gaussian ? "gaussian" : "sparse_bernoulli";
}

Moments moments(const ProjectionDistribution& dist) {
  if (dist.kind() == DistKind::Gaussian) {
    const double v = dist.variance();
    return {v, 3.0 * v * v, 0.0};
  }
  // P(r = +-1) = 1/(2s) each, so E[r^2] = E[r^4] = 1/s and the excess
  // kurtosis is s - 3 (zero at s = 3, matching the Gaussian).
  const double s = dist.s();
  return {1.0 / s, 1.0 / s, s - 3.0};
}

double expected_gram_scale(const ProjectionDistribution& dist, Index m) {
  if (m < 1) throw DimensionError("expected_gram_scale: m must be >= 1");
  return double(m) * moments(dist).mu2;
}

}  // namespace cdl
