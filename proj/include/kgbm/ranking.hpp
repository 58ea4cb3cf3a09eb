#pragma once

#include <Eigen/Dense>
#include <vector>

namespace kgbm {

using ScoreMatrix = Eigen::MatrixXd;
using RankingMatrix = Eigen::MatrixXi;
using ScoreTensor = std::vector<ScoreMatrix>;    // K frontal slices
using RankingTensor = std::vector<RankingMatrix>;
using BoolMatrix = Eigen::MatrixXi;              // entries 0/1
using BoolTensor = std::vector<BoolMatrix>;

// Dense rank of every entry in the multiset of entries of S: the highest
// score gets rank 1, equal scores share a rank, and ranks have no gaps.
// Ties use exact floating-point equality. Throws on NaN entries.
RankingMatrix dense_rank(const ScoreMatrix& S);

// Slice-wise dense_rank.
RankingTensor dense_rank_tensor(const ScoreTensor& T);

// 1 iff x >= tau.
inline int round_tau(double x, double tau = 0.5) { return x >= tau ? 1 : 0; }

BoolMatrix round_tau(const Eigen::MatrixXd& S, double tau = 0.5);

// True iff every 1-cell of B scores strictly higher than every 0-cell of S,
// i.e. the ranking of S puts all 1s above all 0s. Vacuously true when B is
// all-ones or all-zeros.
bool is_consistent(const ScoreMatrix& S, const BoolMatrix& B);

// Checks entries in {1,...,N^2} plus density: any entry s>1 has some entry
// with value s-1 somewhere in the matrix.
bool is_valid_ranking_matrix(const RankingMatrix& P);
bool is_valid_ranking_tensor(const RankingTensor& P);

}  // namespace kgbm
