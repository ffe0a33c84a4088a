#include "cdl/theory.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "cdl/parallel.hpp"
#include "cdl/projection.hpp"
#include "cdl/rng.hpp"

namespace cdl {

namespace {

void check_bound_args(Index p, Index m, Index cluster_size, double kurtosis) {
  if (p < 1 || m < 1 || cluster_size < 1)
    throw ConfigError("deviation bound: p, m and cluster size must be >= 1");
  if (!(kurtosis + 1.0 + double(p) > 0.0))
    throw ConfigError("deviation bound: kappa + 1 + p must be positive");
}

Vector random_unit_vector(Index p, Rng& rng) {
  Vector v(p);
  double norm2 = 0.0;
  do {
    rng.fill_normal(v.data(), std::size_t(p));
    norm2 = v.squaredNorm();
  } while (norm2 == 0.0);
  return v / std::sqrt(norm2);
}

}  // namespace

double p0_bound(Index p, Index m, Index cluster_size, double kurtosis,
                double eta) {
  check_bound_args(p, m, cluster_size, kurtosis);
  if (!(eta > 0.0)) throw ConfigError("deviation bound: eta must be positive");
  return (kurtosis + 1.0 + double(p)) /
         (double(m) * double(cluster_size) * eta * eta);
}

double p1_bound(Index p, Index m, Index cluster_size, double kurtosis,
                double eta, double snr) {
  if (!(snr > 0.0)) throw ConfigError("deviation bound: snr must be positive");
  const double p0 = p0_bound(p, m, cluster_size, kurtosis, eta);
  return p0 * (1.0 + 1.0 / snr) +
         1.0 / (snr * double(cluster_size) * eta * eta);
}

double eta_for_p0(double target_p0, Index p, Index m, Index cluster_size,
                  double kurtosis) {
  check_bound_args(p, m, cluster_size, kurtosis);
  if (!(target_p0 > 0.0))
    throw ConfigError("deviation bound: target p0 must be positive");
  return std::sqrt((kurtosis + 1.0 + double(p)) /
                   (double(m) * double(cluster_size) * target_p0));
}

std::vector<double> hk_distance_samples(const ProjectionDistribution& dist,
                                        Index p, Index m, Index cluster_size,
                                        int trials, std::uint64_t seed,
                                        int threads) {
  check_bound_args(p, m, cluster_size, moments(dist).kurtosis);
  if (trials < 1) throw ConfigError("hk_distance_samples: trials must be >= 1");
  const double scale = expected_gram_scale(dist, m) * double(cluster_size);
  std::vector<double> out(static_cast<std::size_t>(trials));
  parallel_for(trials, threads, [&](Index t) {
    const std::uint64_t trial_seed = mix_seed(seed, std::uint64_t(t));
    Matrix A = Matrix::Zero(p, p);
    for (Index i = 0; i < cluster_size; ++i) {
      const ProjectionMatrix R = sample_projection(
          dist, p, m, mix_seed(trial_seed, 1000 + std::uint64_t(i)));
      R.add_weighted_gram_lower(A, 1.0);
    }
    symmetrize_from_lower(A);
    A /= scale;                       // A is now H_k
    A.diagonal().array() -= 1.0;      // H_k - I
    out[std::size_t(t)] = A.norm() / std::sqrt(double(p));
  });
  return out;
}

std::vector<double> fk_distance_samples(const ProjectionDistribution& dist,
                                        Index p, Index m, Index cluster_size,
                                        double snr, int trials,
                                        std::uint64_t seed, int threads) {
  check_bound_args(p, m, cluster_size, moments(dist).kurtosis);
  if (trials < 1) throw ConfigError("fk_distance_samples: trials must be >= 1");
  if (!(snr > 0.0)) throw ConfigError("fk_distance_samples: snr must be positive");
  const double scale = expected_gram_scale(dist, m) * double(cluster_size);
  // unit-norm center; per-coordinate noise variance sigma^2 = 1/(snr p) makes
  // snr = ||center||^2 / E||eps||^2
  const double sigma = std::sqrt(1.0 / (snr * double(p)));
  std::vector<double> out(static_cast<std::size_t>(trials));
  parallel_for(trials, threads, [&](Index t) {
    const std::uint64_t trial_seed = mix_seed(seed, std::uint64_t(t));
    Rng center_rng(mix_seed(trial_seed, 1));
    Rng noise_rng(mix_seed(trial_seed, 2));
    const Vector center = random_unit_vector(p, center_rng);
    Vector f = Vector::Zero(p);
    Vector x(p);
    for (Index i = 0; i < cluster_size; ++i) {
      const ProjectionMatrix R = sample_projection(
          dist, p, m, mix_seed(trial_seed, 1000 + std::uint64_t(i)));
      noise_rng.fill_normal(x.data(), std::size_t(p));
      x = center + sigma * x;
      f.noalias() += R.apply(R.apply_transpose(x));
    }
    f /= scale;
    out[std::size_t(t)] = (f - center).norm();  // ||center|| = 1
  });
  return out;
}

namespace {

MonteCarloCell make_cell(const ProjectionDistribution& dist, Index p, Index m,
                         Index cluster_size, int trials,
                         const std::vector<double>& samples, double eta) {
  MonteCarloCell cell;
  cell.dist_name = dist.name();
  cell.dist_parameter = dist.parameter();
  cell.p = p;
  cell.m = m;
  cell.cluster_size = cluster_size;
  cell.trials = trials;
  cell.eta = eta;
  double sum = 0.0;
  int violations = 0;
  for (double d : samples) {
    sum += d;
    if (d >= eta) ++violations;
  }
  cell.mean_distance = sum / double(samples.size());
  cell.violation_rate = double(violations) / double(samples.size());
  return cell;
}

}  // namespace

MonteCarloReport monte_carlo_hk(const ProjectionDistribution& dist, Index p,
                                Index m,
                                const std::vector<Index>& cluster_sizes,
                                double target_p0, int trials,
                                std::uint64_t seed, int threads) {
  const double kappa = moments(dist).kurtosis;
  MonteCarloReport report;
  for (std::size_t c = 0; c < cluster_sizes.size(); ++c) {
    const Index N = cluster_sizes[c];
    const double eta = eta_for_p0(target_p0, p, m, N, kappa);
    const auto samples = hk_distance_samples(dist, p, m, N, trials,
                                             mix_seed(seed, c), threads);
    MonteCarloCell cell = make_cell(dist, p, m, N, trials, samples, eta);
    cell.p0 = p0_bound(p, m, N, kappa, eta);
    cell.p1 = std::numeric_limits<double>::quiet_NaN();
    report.cells.push_back(std::move(cell));
  }
  return report;
}

MonteCarloReport monte_carlo_fk(const ProjectionDistribution& dist, Index p,
                                Index m,
                                const std::vector<Index>& cluster_sizes,
                                double snr, double target_p0, int trials,
                                std::uint64_t seed, int threads) {
  const double kappa = moments(dist).kurtosis;
  MonteCarloReport report;
  for (std::size_t c = 0; c < cluster_sizes.size(); ++c) {
    const Index N = cluster_sizes[c];
    const double eta = eta_for_p0(target_p0, p, m, N, kappa);
    const auto samples = fk_distance_samples(dist, p, m, N, snr, trials,
                                             mix_seed(seed, c), threads);
    MonteCarloCell cell = make_cell(dist, p, m, N, trials, samples, eta);
    cell.p0 = p0_bound(p, m, N, kappa, eta);
    cell.p1 = p1_bound(p, m, N, kappa, eta, snr);
    report.cells.push_back(std::move(cell));
  }
  return report;
}

void write_report_csv(std::ostream& out, const MonteCarloReport& report) {
  out << "dist,s_or_variance,p,m,cluster_size,trials,mean_distance,eta,"
         "violation_rate,p0,p1\n";
  for (const auto& c : report.cells) {
    out << c.dist_name << ',' << format_g17(c.dist_parameter) << ',' << c.p
        << ',' << c.m << ',' << c.cluster_size << ',' << c.trials << ','
        << format_g17(c.mean_distance) << ',' << format_g17(c.eta) << ','
        << format_g17(c.violation_rate) << ',' << format_g17(c.p0) << ','
        << format_g17(c.p1) << '\n';
  }
}

}  // namespace cdl
