#include <doctest.h>

#include <cmath>

#include "cdl/sparse_coding.hpp"
#include "helpers.hpp"

using namespace cdl;
using cdl::testing::naive_omp;
using cdl::testing::random_matrix;
using cdl::testing::random_vector;

namespace {

bool same_code(const SparseCode& a, const SparseCode& b, double tol) {
  if (a.support != b.support || a.degenerate != b.degenerate) return false;
  for (std::size_t t = 0; t < a.values.size(); ++t) {
    const double scale = std::max(std::abs(a.values[t]), std::abs(b.values[t]));
    if (std::abs(a.values[t] - b.values[t]) > tol * std::max(scale, 1.0))
      return false;
  }
  return true;
}

}  // namespace

TEST_SUITE_BEGIN("sparse_coding");

TEST_CASE("equivalent dictionary carries psi, norms and optional gram") {
  const auto R = sample_projection(
      ProjectionDistribution::sparse_bernoulli(3), 30, 12, 4);
  const Matrix D = random_matrix(30, 7, 5);
  const auto dict = equivalent_dictionary(R, D, true);
  CHECK(dict.psi == R.sketch(D));
  CHECK(dict.dim() == 12);
  CHECK(dict.atoms() == 7);
  REQUIRE(dict.has_gram());
  const Matrix gram_ref = dict.psi.transpose() * dict.psi;
  CHECK((dict.gram - gram_ref).cwiseAbs().maxCoeff() <
        1e-12 * gram_ref.cwiseAbs().maxCoeff());
  for (Index j = 0; j < 7; ++j)
    CHECK(dict.column_norms[j] ==
          doctest::Approx(dict.psi.col(j).norm()).epsilon(1e-14));

  const auto no_gram = equivalent_dictionary(R, D, false);
  CHECK(!no_gram.has_gram());

  const auto plain = plain_dictionary(D, true);
  CHECK(plain.psi == D);
}

TEST_CASE("omp matches a QR-based step-by-step oracle") {
  for (std::uint64_t trial = 0; trial < 200; ++trial) {
    const Index m = 16, K = 24;
    const int T = 1 + int(trial % 5);
    const auto dict =
        plain_dictionary(random_matrix(m, K, 1000 + trial), true);
    const Vector y = random_vector(m, 5000 + trial);
    const SparseCode got = omp(y, dict, T);
    const SparseCode want = naive_omp(y, dict, T);
    CAPTURE(trial);
    REQUIRE(got.support == want.support);
    CHECK(same_code(got, want, 1e-9));
    REQUIRE(got.residual_norms.size() == want.residual_norms.size());
    for (std::size_t i = 0; i < got.residual_norms.size(); ++i)
      CHECK(got.residual_norms[i] ==
            doctest::Approx(want.residual_norms[i]).epsilon(1e-9).scale(y.norm()));
  }
}

TEST_CASE("residual norms decrease strictly along the pursuit") {
  const auto dict = plain_dictionary(random_matrix(20, 30, 8), true);
  const Vector y = random_vector(20, 9);
  const auto code = omp(y, dict, 6);
  for (std::size_t i = 1; i < code.residual_norms.size(); ++i)
    CHECK(code.residual_norms[i] < code.residual_norms[i - 1]);
}

TEST_CASE("exact sparse signals are recovered to machine precision") {
  const Index m = 40, K = 10;
  const Matrix Psi = random_matrix(m, K, 77);
  Vector y = 2.0 * Psi.col(1) - 1.5 * Psi.col(4) + 0.75 * Psi.col(8);
  const auto code = omp(y, plain_dictionary(Psi, false), 3);
  REQUIRE(code.support == std::vector<int>{1, 4, 8});
  CHECK(code.values[0] == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(code.values[1] == doctest::Approx(-1.5).epsilon(1e-10));
  CHECK(code.values[2] == doctest::Approx(0.75).epsilon(1e-10));
  CHECK(code.residual_norms.back() <= kResidualTol * y.norm());
}

TEST_CASE("early stop once the residual tolerance is met") {
  const Matrix Psi = random_matrix(25, 8, 21);
  const Vector y = 2.5 * Psi.col(3);
  const auto code = omp(y, plain_dictionary(Psi, false), 4);
  CHECK(code.support == std::vector<int>{3});  // no further selections
  CHECK(!code.degenerate);
}

TEST_CASE("zero signal codes as empty, all-zero dictionary as degenerate") {
  const auto dict = plain_dictionary(random_matrix(10, 5, 31), true);
  const auto zero_y = omp(Vector::Zero(10), dict, 3);
  CHECK(zero_y.support.empty());
  CHECK(!zero_y.degenerate);

  const auto dead = plain_dictionary(Matrix::Zero(10, 5), true);
  const auto code = omp(random_vector(10, 32), dead, 3);
  CHECK(code.degenerate);
  CHECK(code.support.empty());
}

TEST_CASE("duplicate atoms: dependence guard stops the pursuit") {
  Matrix Psi = random_matrix(15, 6, 41);
  Psi.col(5) = Psi.col(2);  // exact duplicate
  const Vector y = 3.0 * Psi.col(2);
  const auto code = omp(y, plain_dictionary(Psi, false), 4);
  REQUIRE(code.support.size() == 1);
  CHECK(code.support[0] == 2);  // tie resolved to the lowest index
}

TEST_CASE("batch pursuit equals the per-sample one across random blocks") {
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    const Index m = 12, K = 18, n = 25;
    const int T = 1 + int(trial % 4);
    const auto dict =
        plain_dictionary(random_matrix(m, K, 2000 + trial), true);
    Matrix Y = random_matrix(m, n, 7000 + trial);
    Y.col(0).setZero();  // keep one degenerate-ish sample in every block
    const auto block = batch_omp_block(Y, dict, T);

    REQUIRE(block.samples() == n);
    CHECK(block.capacity() == T);
    for (Index i = 0; i < n; ++i) {
      const auto single = omp(Y.col(i), dict, T);
      CAPTURE(trial);
      CAPTURE(i);
      REQUIRE(block.count(i) == int(single.support.size()));
      CHECK(block.degenerate(i) == single.degenerate);
      for (int t = 0; t < block.count(i); ++t) {
        CHECK(block.atom(i, t) == single.support[std::size_t(t)]);
        const double want = single.values[std::size_t(t)];
        CHECK(block.value(i, t) ==
              doctest::Approx(want).epsilon(1e-9).scale(
                  std::max(1.0, std::abs(want))));
      }
    }
  }
}

TEST_CASE("batch pursuit requires the gram matrix") {
  const auto dict = plain_dictionary(random_matrix(8, 5, 3), false);
  CHECK_THROWS_AS(batch_omp_block(random_matrix(8, 4, 4), dict, 2),
                  ConfigError);
}

TEST_CASE("code block bookkeeping") {
  SparseCodeBlock block(3, 2);
  SparseCode code;
  code.support = {1, 4};
  code.values = {0.5, -2.0};
  block.assign(0, code);
  CHECK(block.count(0) == 2);
  CHECK(block.atom(0, 0) == 1);
  CHECK(block.atom(0, 1) == 4);
  CHECK(block.slot_of(0, 4) == 1);
  CHECK(block.slot_of(0, 3) == -1);
  CHECK(block.slot_of(1, 1) == -1);  // nothing assigned yet

  block.set_value(0, 1, 9.0);
  CHECK(block.value(0, 1) == 9.0);

  SparseCodeBlock other(3, 2);
  other.assign(0, code);
  CHECK(block.same_pattern(other));  // values differ, supports match
  SparseCode moved;
  moved.support = {2};
  moved.values = {1.0};
  other.assign(1, moved);
  CHECK(!block.same_pattern(other));
}

TEST_SUITE_END();
