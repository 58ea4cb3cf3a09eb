#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "kgbm/ranking.hpp"
#include "kgbm/util.hpp"
#include "support/test_util.hpp"

using namespace kgbm;

namespace {

// Direct transcription of the dense-rank definition: the rank of an entry is
// one plus the number of distinct values strictly above it.
RankingMatrix dense_rank_oracle(const ScoreMatrix& S) {
  RankingMatrix P(S.rows(), S.cols());
  for (Eigen::Index i = 0; i < S.rows(); ++i) {
    for (Eigen::Index j = 0; j < S.cols(); ++j) {
      std::vector<double> above;
      for (Eigen::Index a = 0; a < S.rows(); ++a) {
        for (Eigen::Index b = 0; b < S.cols(); ++b) {
          if (S(a, b) > S(i, j)) above.push_back(S(a, b));
        }
      }
      std::sort(above.begin(), above.end());
      above.erase(std::unique(above.begin(), above.end()), above.end());
      P(i, j) = static_cast<int>(above.size()) + 1;
    }
  }
  return P;
}

// Pairwise definition of consistency on ranks (1-cells strictly above all
// 0-cells in the ranking).
bool is_consistent_oracle(const ScoreMatrix& S, const BoolMatrix& B) {
  RankingMatrix P = dense_rank(S);
  for (Eigen::Index i = 0; i < S.rows(); ++i)
    for (Eigen::Index j = 0; j < S.cols(); ++j)
      for (Eigen::Index a = 0; a < S.rows(); ++a)
        for (Eigen::Index b = 0; b < S.cols(); ++b)
          if (B(i, j) == 1 && B(a, b) == 0 && P(i, j) >= P(a, b)) return false;
  return true;
}

ScoreMatrix worked_example() {
  ScoreMatrix S(3, 3);
  S << 0.2, 2.4, 1, -1, 4, 2, -3, 0.2, 0;
  return S;
}

}  // namespace

TEST_CASE("dense_rank reproduces the worked example") {
  RankingMatrix expected(3, 3);
  expected << 5, 2, 4, 7, 1, 3, 8, 5, 6;
  CHECK(dense_rank(worked_example()) == expected);
}

TEST_CASE("dense_rank of a constant matrix is all ones") {
  ScoreMatrix S = ScoreMatrix::Constant(4, 4, 7.0);
  CHECK(dense_rank(S) == RankingMatrix::Ones(4, 4));
}

TEST_CASE("dense_rank matches the definitional oracle on random matrices") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    int n = 2 + rng.uniform_int(5);
    ScoreMatrix S = test::random_matrix(n, n, rng);
    // inject some exact ties
    if (n >= 3) S(0, 1) = S(2, 0);
    CHECK(dense_rank(S) == dense_rank_oracle(S));
  }
}

TEST_CASE("pi(-pi(S)) == pi(S)") {
  Rng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    int n = 2 + rng.uniform_int(5);
    ScoreMatrix S = test::random_matrix(n, n, rng);
    RankingMatrix P = dense_rank(S);
    CHECK(dense_rank(-P.cast<double>()) == P);
  }
}

TEST_CASE("order reversal holds for every pair of cells") {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    int n = 2 + rng.uniform_int(5);  // up to 6x6
    ScoreMatrix S = test::random_matrix(n, n, rng);
    if (n >= 2) S(1, 0) = S(0, 1);
    RankingMatrix P = dense_rank(S);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b)
            CHECK((S(i, j) <= S(a, b)) == (P(i, j) >= P(a, b)));
  }
}

TEST_CASE("ranking matrices are dense and in range") {
  Rng rng(14);
  for (int trial = 0; trial < 50; ++trial) {
    int n = 2 + rng.uniform_int(6);
    ScoreMatrix S = test::random_matrix(n, n, rng);
    CHECK(is_valid_ranking_matrix(dense_rank(S)));
  }
  RankingMatrix gap(2, 2);
  gap << 1, 3, 3, 1;  // value 2 missing
  CHECK_FALSE(is_valid_ranking_matrix(gap));
  RankingMatrix out_of_range(2, 2);
  out_of_range << 0, 1, 1, 1;
  CHECK_FALSE(is_valid_ranking_matrix(out_of_range));
}

TEST_CASE("strictly increasing affine maps leave the ranking unchanged") {
  Rng rng(15);
  for (int trial = 0; trial < 30; ++trial) {
    int n = 2 + rng.uniform_int(4);
    ScoreMatrix S = test::random_matrix(n, n, rng);
    double a = 0.1 + rng.uniform();
    double b = rng.uniform(-5, 5);
    CHECK(dense_rank(S) == dense_rank(a * S.array() + b));
  }
}

TEST_CASE("NaN entries are rejected") {
  ScoreMatrix S = ScoreMatrix::Zero(2, 2);
  S(1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(dense_rank(S), std::invalid_argument);
}

TEST_CASE("dense_rank_tensor applies slice-wise") {
  RankingMatrix expected(3, 3);
  expected << 5, 2, 4, 7, 1, 3, 8, 5, 6;
  ScoreTensor single{worked_example()};
  CHECK(dense_rank_tensor(single)[0] == expected);

  ScoreTensor twin{worked_example(), worked_example()};
  RankingTensor ranked = dense_rank_tensor(twin);
  CHECK(ranked[0] == ranked[1]);

  Rng rng(16);
  ScoreTensor random_t;
  for (int k = 0; k < 3; ++k) random_t.push_back(test::random_matrix(4, 4, rng));
  RankingTensor rt = dense_rank_tensor(random_t);
  for (int k = 0; k < 3; ++k) CHECK(rt[static_cast<size_t>(k)] == dense_rank(random_t[static_cast<size_t>(k)]));
}

TEST_CASE("round_tau boundary and matrix forms") {
  CHECK(round_tau(0.5, 0.5) == 1);
  CHECK(round_tau(0.4999, 0.5) == 0);

  Eigen::MatrixXd zero_one(2, 2);
  zero_one << 0, 1, 1, 0;
  CHECK(round_tau(zero_one) == zero_one.cast<int>());
}

TEST_CASE("consistency examples") {
  ScoreMatrix sep(2, 2);
  sep << 2, 0, 0, 2;
  BoolMatrix eye(2, 2);
  eye << 1, 0, 0, 1;
  CHECK(is_consistent(sep, eye));

  ScoreMatrix ties = ScoreMatrix::Ones(2, 2);
  CHECK_FALSE(is_consistent(ties, eye));

  CHECK(is_consistent(sep, BoolMatrix::Ones(2, 2)));
  CHECK(is_consistent(sep, BoolMatrix::Zero(2, 2)));
}

TEST_CASE("is_consistent equals the pairwise-definition scan") {
  Rng rng(17);
  for (int trial = 0; trial < 60; ++trial) {
    int n = 2 + rng.uniform_int(4);
    ScoreMatrix S = test::random_matrix(n, n, rng);
    BoolMatrix B(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) B(i, j) = rng.coin() ? 1 : 0;
    // make separable instances common enough to exercise both outcomes
    if (trial % 3 == 0) {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          if (B(i, j)) S(i, j) += 2.5;
    }
    CHECK(is_consistent(S, B) == is_consistent_oracle(S, B));
  }
}

TEST_CASE("consistency holds exactly when rounding at the 1-cell minimum recovers B") {
  Rng rng(18);
  for (int trial = 0; trial < 60; ++trial) {
    int n = 2 + rng.uniform_int(4);
    ScoreMatrix S = test::random_matrix(n, n, rng);
    BoolMatrix B(n, n);
    int ones = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        B(i, j) = rng.coin() ? 1 : 0;
        ones += B(i, j);
      }
    if (trial % 2 == 0) {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          if (B(i, j)) S(i, j) += 2.5;
    }
    if (ones == 0 || ones == n * n) continue;

    double min_one = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (B(i, j)) min_one = std::min(min_one, S(i, j));
    CHECK(is_consistent(S, B) == (round_tau(S, min_one) == B));
  }
}
