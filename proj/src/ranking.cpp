#include "kgbm/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace kgbm {

RankingMatrix dense_rank(const ScoreMatrix& S) {
  const Eigen::Index rows = S.rows(), cols = S.cols();
  std::vector<double> values;
  values.reserve(static_cast<size_t>(rows * cols));
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      double v = S(i, j);
      if (std::isnan(v)) throw std::invalid_argument("dense_rank: NaN entry");
      values.push_back(v);
    }
  }
  std::sort(values.begin(), values.end(), std::greater<double>());
  values.erase(std::unique(values.begin(), values.end()), values.end());

  RankingMatrix P(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      auto it = std::lower_bound(values.begin(), values.end(), S(i, j),
                                 std::greater<double>());
      P(i, j) = static_cast<int>(it - values.begin()) + 1;
    }
  }
  return P;
}

RankingTensor dense_rank_tensor(const ScoreTensor& T) {
  RankingTensor out;
  out.reserve(T.size());
  for (const ScoreMatrix& S : T) out.push_back(dense_rank(S));
  return out;
}

BoolMatrix round_tau(const Eigen::MatrixXd& S, double tau) {
  BoolMatrix B(S.rows(), S.cols());
  for (Eigen::Index i = 0; i < S.rows(); ++i)
    for (Eigen::Index j = 0; j < S.cols(); ++j) B(i, j) = round_tau(S(i, j), tau);
  return B;
}

bool is_consistent(const ScoreMatrix& S, const BoolMatrix& B) {
  if (S.rows() != B.rows() || S.cols() != B.cols()) {
    throw std::invalid_argument("is_consistent: shape mismatch");
  }
  bool has_one = false, has_zero = false;
  double min_one = 0, max_zero = 0;
  for (Eigen::Index i = 0; i < S.rows(); ++i) {
    for (Eigen::Index j = 0; j < S.cols(); ++j) {
      if (B(i, j) != 0) {
        min_one = has_one ? std::min(min_one, S(i, j)) : S(i, j);
        has_one = true;
      } else {
        max_zero = has_zero ? std::max(max_zero, S(i, j)) : S(i, j);
        has_zero = true;
      }
    }
  }
  if (!has_one || !has_zero) return true;
  return min_one > max_zero;
}

bool is_valid_ranking_matrix(const RankingMatrix& P) {
  const long total = static_cast<long>(P.rows()) * static_cast<long>(P.cols());
  if (total == 0) return false;
  std::vector<char> present(static_cast<size_t>(total) + 1, 0);
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    for (Eigen::Index j = 0; j < P.cols(); ++j) {
      int v = P(i, j);
      if (v < 1 || v > total) return false;
      present[static_cast<size_t>(v)] = 1;
    }
  }
  for (long v = 2; v <= total; ++v) {
    if (present[static_cast<size_t>(v)] && !present[static_cast<size_t>(v - 1)]) return false;
  }
  return true;
}

bool is_valid_ranking_tensor(const RankingTensor& P) {
  if (P.empty()) return false;
  for (const RankingMatrix& slice : P) {
    if (!is_valid_ranking_matrix(slice)) return false;
  }
  return true;
}

}  // namespace kgbm
