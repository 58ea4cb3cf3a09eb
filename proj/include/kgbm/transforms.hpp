#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kgbm/models.hpp"
#include "kgbm/ranking.hpp"

namespace kgbm {

// Evidence record for one verification run of a model transform or
// construction.
struct TransformReport {
  std::string name;
  std::string source;
  int source_dim = 0;
  std::string target;
  int target_dim = 0;
  int trials = 0;
  int max_rank_mismatch = 0;      // 0 = exact ranking agreement
  double max_score_residual = 0;  // max |s_target - expected| over all cells
  bool passed = true;
  std::string note;     // e.g. documented looser bound from other routes
  std::string failure;  // failing seed plus serialized counterexample

  std::string to_text() const;
  KvList to_kv() const;
};

// TransE -> RESCAL of size 2r+1. The lifted score satisfies
// s'(i,k,j) = s_transe(i,k,j) + |r_k|^2, so rankings agree slice-wise.
RescalParams transe_to_rescal(const TransEParams& p);

// HolE -> RESCAL of the same size via the circulant relation matrix whose
// row t is the relation vector cyclically right-shifted t times.
RescalParams hole_to_rescal(const HolEParams& p);

// The circulant matrix itself (row 0 = r, row t = right-shift^t of r).
Eigen::MatrixXd circulant_from_row(const Eigen::VectorXd& r);

// DISTMULT -> RESCAL of the same size: R_k = diag(r_k). Exact score equality.
RescalParams distmult_to_rescal(const DistmultParams& p);

// ComplEx -> RESCAL of size 2r: entity rows (x_i^T, y_i^T) and
// R_k = [[diag(p_k), -diag(q_k)], [-diag(q_k), -diag(p_k)]]. Exact score
// equality.
RescalParams complex_to_rescal(const ComplexParams& p);

// A = I_N, R_k = -P_(k); the model's score tensor dense-ranks back to P.
// Throws if P is not a valid ranking tensor.
RescalParams rescal_universal(const RankingTensor& P);

// Per-slice rounding factorization: round_{1/2}(L_k Q_k^T) = B_k.
struct RoundingFactorization {
  Eigen::MatrixXd L, Q;  // N x r_k each
};

// RESCAL model whose rounded score tensor equals B. When no factorizations
// are given, the trivial one (L_k = I_N, Q_k = B_k^T) is used. Supplied
// factorizations are validated; a failing slice is reported by index.
RescalParams rescal_consistent(const BoolTensor& B);
RescalParams rescal_consistent(const BoolTensor& B,
                               const std::vector<RoundingFactorization>& factors);

// ComplEx parameters reconstructing arbitrary real score matrices: per slice,
// form the normal matrix Z_k = S_k + i S_k^T, unitarily diagonalize
// Z_k = U D U^*, and place the slices in a block layout (entity matrix is
// N x KN). Then S_k = Re(A diag(r_k) A^*) up to eigensolver accuracy.
ComplexParams complex_reconstruction(const ScoreTensor& S);

// The consistency construction: reconstruct S_k = B_k.
ComplexParams complex_consistent(const BoolTensor& B);

// Re(A diag(r_k) A^*) with A = A_re + i A_im; the conjugated bilinear form
// used by the consistency construction.
Eigen::MatrixXd complex_hermitian_score_matrix(const ComplexParams& p, int k);

// True iff every relation slice of the model's ranking tensor has a constant
// diagonal. Analytically always true for TransE.
bool check_transe_obstruction(const TransEParams& p);

// RESCAL witness (N=2, r=2) whose slice-1 ranking has distinct diagonal
// ranks, certifying that no TransE model reproduces it.
RescalParams transe_obstruction_witness();

// True iff B is asymmetric (some b_ij != b_ji), i.e. no DISTMULT scoring
// matrix can be consistent with B.
bool check_distmult_obstruction(const BoolMatrix& B);

// --- randomized verification drivers ------------------------------------------

struct VerifyOptions {
  int trials = 100;
  int max_entities = 8;   // N drawn from [2, max_entities]
  int max_dim = 4;        // r drawn from [1, max_dim]
  int max_relations = 3;  // K drawn from [1, max_relations]
  uint64_t seed = 20170301;
};

TransformReport verify_transe_to_rescal(const VerifyOptions& opt);
TransformReport verify_hole_to_rescal(const VerifyOptions& opt);
TransformReport verify_distmult_to_rescal(const VerifyOptions& opt);
TransformReport verify_complex_to_rescal(const VerifyOptions& opt);
TransformReport verify_rescal_universal(const VerifyOptions& opt);
TransformReport verify_rescal_consistent(const VerifyOptions& opt);
TransformReport verify_complex_consistent(const VerifyOptions& opt);
TransformReport verify_obstructions(const VerifyOptions& opt);

// All of the above in a fixed order.
std::vector<TransformReport> verify_all(const VerifyOptions& opt);

}  // namespace kgbm
