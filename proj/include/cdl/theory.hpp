#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cdl/common.hpp"
#include "cdl/distribution.hpp"

namespace cdl {

// Deviation bounds for the single-cluster estimators built from N = |I_k|
// sketched samples in dimension p with sketch size m and entry excess
// kurtosis kappa. Both are Markov bounds, so values above 1 are legal
// (they are then vacuous).
//
//   P( ||H_k - I||_F / sqrt(p) >= eta )  <=  P0 = (kappa+1+p) / (m N eta^2)
//   P( ||f_k - mean||  / ||mean|| >= eta ) <= P1 = P0 (1 + 1/snr) + 1/(snr N eta^2)
//
// snr is the ratio of the squared center norm to the expected squared noise
// norm per sample, ||mean||^2 / E||eps||^2.
double p0_bound(Index p, Index m, Index cluster_size, double kurtosis,
                double eta);
double p1_bound(Index p, Index m, Index cluster_size, double kurtosis,
                double eta, double snr);

// eta at which p0_bound equals target_p0.
double eta_for_p0(double target_p0, Index p, Index m, Index cluster_size,
                  double kurtosis);

// One Monte-Carlo estimate of P(distance >= eta) per trial: draws N fresh
// projection matrices, forms H_k = sum R_i R_i^T / (m mu2 N) (hk) or the
// estimated center f_k of a noisy point cloud around a random unit vector
// (fk), and returns each trial's distance. Trials are independently seeded
// from mix_seed(seed, trial), so results do not depend on thread count.
std::vector<double> hk_distance_samples(const ProjectionDistribution& dist,
                                        Index p, Index m, Index cluster_size,
                                        int trials, std::uint64_t seed,
                                        int threads = 1);
std::vector<double> fk_distance_samples(const ProjectionDistribution& dist,
                                        Index p, Index m, Index cluster_size,
                                        double snr, int trials,
                                        std::uint64_t seed, int threads = 1);

struct MonteCarloCell {
  std::string dist_name;
  double dist_parameter = 0.0;  // s or variance
  Index p = 0, m = 0, cluster_size = 0;
  int trials = 0;
  double mean_distance = 0.0;
  double eta = 0.0;
  double violation_rate = 0.0;
  double p0 = 0.0;
  double p1 = 0.0;  // NaN for hk reports
};

struct MonteCarloReport {
  std::vector<MonteCarloCell> cells;
};

// Sweeps cluster sizes at the eta where the P0 bound equals target_p0.
// Cell c is seeded with mix_seed(seed, c).
MonteCarloReport monte_carlo_hk(const ProjectionDistribution& dist, Index p,
                                Index m, const std::vector<Index>& cluster_sizes,
                                double target_p0, int trials,
                                std::uint64_t seed, int threads = 1);
MonteCarloReport monte_carlo_fk(const ProjectionDistribution& dist, Index p,
                                Index m, const std::vector<Index>& cluster_sizes,
                                double snr, double target_p0, int trials,
                                std::uint64_t seed, int threads = 1);

// CSV with header dist,s_or_variance,p,m,cluster_size,trials,mean_distance,
// eta,violation_rate,p0,p1; floats carry 17 significant digits.
void write_report_csv(std::ostream& out, const MonteCarloReport& report);

}  // namespace cdl
