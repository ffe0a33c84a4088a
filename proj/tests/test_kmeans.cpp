#include <doctest.h>

#include <cmath>
#include <vector>

#include "cdl/kmeans.hpp"
#include "cdl/partition.hpp"
#include "cdl/rng.hpp"
#include "cdl/sketch.hpp"
#include "helpers.hpp"

using namespace cdl;
using cdl::testing::identity_sketch;
using cdl::testing::naive_lloyd;
using cdl::testing::random_matrix;
using cdl::testing::random_vector;

namespace {

// Gaussian blobs around K given means.
Matrix blob_data(const Matrix& means, Index per_cluster, double noise,
                 std::uint64_t seed) {
  const Index p = means.rows(), K = means.cols();
  Matrix X(p, K * per_cluster);
  Rng rng(seed);
  Vector z(p);
  for (Index k = 0; k < K; ++k)
    for (Index i = 0; i < per_cluster; ++i) {
      rng.fill_normal(z.data(), std::size_t(p));
      X.col(k * per_cluster + i) = means.col(k) + noise * z;
    }
  return X;
}

double sketched_objective(const SketchedDataset& data, const Matrix& C,
                          const std::vector<int>& assignments) {
  BlockMatrixAccess access(data.source, data.partition.blocks());
  double total = 0.0;
  for (Index l = 0; l < data.partition.blocks(); ++l) {
    const Matrix psi = access.get(l).sketch(C);
    const Matrix& Y = data.blocks[std::size_t(l)];
    const Index base = data.partition.block_begin(l);
    for (Index i = 0; i < Y.cols(); ++i)
      total += (Y.col(i) - psi.col(assignments[std::size_t(base + i)]))
                   .squaredNorm();
  }
  return total;
}

}  // namespace

TEST_SUITE_BEGIN("kmeans");

TEST_CASE("identity projections reproduce classical Lloyd exactly") {
  const Index p = 8, K = 3, per = 80;
  Matrix means(p, K);
  means.setZero();
  means(0, 0) = 4.0;
  means(1, 1) = -4.0;
  means(2, 2) = 4.0;
  const Matrix X = blob_data(means, per, 0.5, 900);
  const SketchedDataset data = identity_sketch(X, 2);

  const std::uint64_t seed = 901;
  const int iterations = 5;
  std::vector<Matrix> centers_seen;
  const auto observer = [&](const IterationInfo& info) {
    centers_seen.push_back(info.dictionary);
  };
  const KMeansResult got = kmeans_train(data, K, iterations, seed, observer);

  // same starting centers as the library
  const Matrix C0 = random_unit_dictionary(p, K, mix_seed(seed, 0));
  const auto trace = naive_lloyd(X, C0, iterations);
  REQUIRE(!trace.had_empty);

  REQUIRE(centers_seen.size() == std::size_t(iterations));
  for (int it = 0; it < iterations; ++it) {
    CAPTURE(it);
    const double scale =
        std::max(1.0, trace.centers[std::size_t(it)].cwiseAbs().maxCoeff());
    CHECK((centers_seen[std::size_t(it)] - trace.centers[std::size_t(it)])
              .cwiseAbs()
              .maxCoeff() <= 1e-10 * scale);
    CHECK(got.history.objective[std::size_t(it)] ==
          doctest::Approx(trace.objective[std::size_t(it)]).epsilon(1e-9));
  }
  REQUIRE(got.assignments.size() == std::size_t(X.cols()));
  for (Index i = 0; i < X.cols(); ++i)
    CHECK(got.assignments[std::size_t(i)] ==
          int(trace.assignments.back()[std::size_t(i)]));
}

TEST_CASE("identical samples pin the single sketched center exactly") {
  const Index p = 10, m = 6, L = 3, n = 36;
  const Vector v = random_vector(p, 910, 2.0);
  Matrix X(p, n);
  for (Index i = 0; i < n; ++i) X.col(i) = v;

  SketchConfig cfg;
  cfg.m = m;
  cfg.dist = ProjectionDistribution::sparse_bernoulli(2.0);
  cfg.blocks = L;
  cfg.master_seed = 911;
  const SketchedDataset data = sketch_blocks(X, partition_even(n, L), cfg);

  const KMeansResult got = kmeans_train(data, 1, 2, 912);
  REQUIRE(got.centers.cols() == 1);
  CHECK((got.centers.col(0) - v).cwiseAbs().maxCoeff() <= 1e-8 * v.norm());
  for (int a : got.assignments) CHECK(a == 0);
  CHECK(got.history.objective.back() <= 1e-12 * double(n) * v.squaredNorm());
}

TEST_CASE("two sketched clusters recover the true labels and centers") {
  const Index p = 12, m = 8, L = 4, per = 40;
  Matrix means(p, 2);
  means.col(0) = 5.0 * random_vector(p, 920).normalized();
  means.col(1) = -means.col(0);
  const Matrix X = blob_data(means, per, 0.1, 921);

  SketchConfig cfg;
  cfg.m = m;
  cfg.dist = ProjectionDistribution::sparse_bernoulli(3.0);
  cfg.blocks = L;
  cfg.master_seed = 922;
  const SketchedDataset data =
      sketch_blocks(X, partition_even(X.cols(), L), cfg);

  const KMeansResult got = kmeans_train(data, 2, 8, 923);

  // labels must separate the blobs (up to a global swap)
  const int label0 = got.assignments[0];
  for (Index i = 0; i < per; ++i) {
    CHECK(got.assignments[std::size_t(i)] == label0);
    CHECK(got.assignments[std::size_t(per + i)] == 1 - label0);
  }
  CHECK((got.centers.col(label0) - means.col(0)).norm() <= 0.5);
  CHECK((got.centers.col(1 - label0) - means.col(1)).norm() <= 0.5);

  // objective: matches an independent recomputation and never increases
  const double recomputed =
      sketched_objective(data, got.centers, got.assignments);
  CHECK(got.history.objective.back() ==
        doctest::Approx(recomputed).epsilon(1e-9));
  for (std::size_t i = 1; i < got.history.objective.size(); ++i)
    CHECK(got.history.objective[i] <=
          got.history.objective[i - 1] * (1.0 + 1e-9) + 1e-12);
}

TEST_CASE("empty clusters are reseeded deterministically") {
  const Index p = 6, n = 4;
  Matrix X(p, n);
  const Vector v = random_vector(p, 930);
  for (Index i = 0; i < n; ++i) X.col(i) = v;  // one point, four copies

  SketchConfig cfg;
  cfg.m = 4;
  cfg.dist = ProjectionDistribution::sparse_bernoulli(2.0);
  cfg.blocks = 2;
  cfg.master_seed = 931;
  const SketchedDataset data = sketch_blocks(X, partition_even(n, 2), cfg);

  // With K = 3 and identical samples at least two clusters sit empty, so the
  // reseed path runs every iteration.
  const KMeansResult a = kmeans_train(data, 3, 3, 932);
  const KMeansResult b = kmeans_train(data, 3, 3, 932);
  CHECK(a.centers == b.centers);
  CHECK(a.assignments == b.assignments);
  CHECK(a.centers.allFinite());
  CHECK(a.history.objective == b.history.objective);

  const KMeansResult c = kmeans_train(data, 3, 3, 933);
  CHECK(c.centers.allFinite());  // different seed still completes
}

TEST_CASE("argument validation") {
  const Matrix X = random_matrix(5, 6, 940);
  SketchConfig cfg;
  cfg.m = 3;
  cfg.dist = ProjectionDistribution::sparse_bernoulli(2.0);
  cfg.blocks = 2;
  cfg.master_seed = 941;
  const SketchedDataset data = sketch_blocks(X, partition_even(6, 2), cfg);

  CHECK_THROWS_AS(kmeans_train(data, 0, 2, 1), ConfigError);
  CHECK_THROWS_AS(kmeans_train(data, 7, 2, 1), ConfigError);  // K > n
  CHECK_THROWS_AS(kmeans_train(data, 2, 0, 1), ConfigError);
}

TEST_SUITE_END();
