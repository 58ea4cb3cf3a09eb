#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <complex>

#include "kgbm/transforms.hpp"
#include "support/test_util.hpp"

using namespace kgbm;

namespace {

Eigen::MatrixXd transe_scores(const TransEParams& p, int k) {
  const int n = p.num_entities();
  Eigen::MatrixXd S(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) S(i, j) = score(p, i, k, j);
  return S;
}

Eigen::MatrixXd rescal_scores(const RescalParams& p, int k) {
  const int n = p.num_entities();
  Eigen::MatrixXd S(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) S(i, j) = score(p, i, k, j);
  return S;
}

}  // namespace

TEST_CASE("transe lift reproduces the worked ranking") {
  TransEParams p;
  p.A.resize(2, 1);
  p.A << 0, 1;
  p.R.resize(1, 1);
  p.R << 1;

  Eigen::MatrixXd St = transe_scores(p, 0);
  Eigen::MatrixXd expected(2, 2);
  expected << -1, 0, -4, -1;
  CHECK(St == expected);

  RankingMatrix pi_expected(2, 2);
  pi_expected << 2, 1, 3, 2;
  CHECK(dense_rank(St) == pi_expected);

  RescalParams lifted = transe_to_rescal(p);
  CHECK(lifted.dim() == 3);  // 2r+1
  Eigen::MatrixXd Sr = rescal_scores(lifted, 0);
  CHECK(dense_rank(Sr) == pi_expected);

  // score identity: s' = s + |r_k|^2
  double ck = p.R.row(0).squaredNorm();
  CHECK((Sr - St - Eigen::MatrixXd::Constant(2, 2, ck)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("transe lift of the zero model is rank-constant per slice") {
  TransEParams p;
  p.A = Eigen::MatrixXd::Zero(3, 2);
  p.R = Eigen::MatrixXd::Zero(2, 2);
  RescalParams lifted = transe_to_rescal(p);
  for (int k = 0; k < 2; ++k) {
    CHECK(dense_rank(rescal_scores(lifted, k)) == RankingMatrix::Ones(3, 3));
  }
}

TEST_CASE("transe lift verifies over random grid instances") {
  VerifyOptions opt;
  opt.trials = 100;
  opt.max_entities = 8;
  opt.max_dim = 4;
  TransformReport rep = verify_transe_to_rescal(opt);
  INFO(rep.failure);
  CHECK(rep.passed);
  CHECK(rep.max_rank_mismatch == 0);
  CHECK(rep.max_score_residual <= 1e-9);
}

TEST_CASE("circulant relation matrix layout") {
  Eigen::VectorXd r2(2);
  r2 << 5, 7;
  Eigen::MatrixXd C = circulant_from_row(r2);
  Eigen::MatrixXd expected(2, 2);
  expected << 5, 7, 7, 5;
  CHECK(C == expected);

  Eigen::VectorXd r1(1);
  r1 << -3;
  CHECK(circulant_from_row(r1)(0, 0) == -3);

  Eigen::VectorXd r3(3);
  r3 << 1, 2, 3;
  Eigen::MatrixXd C3 = circulant_from_row(r3);
  Eigen::MatrixXd expected3(3, 3);
  expected3 << 1, 2, 3, 3, 1, 2, 2, 3, 1;
  CHECK(C3 == expected3);
}

TEST_CASE("hole lift keeps scores equal") {
  HolEParams p;
  p.A.resize(2, 1);
  p.A << 2, -3;
  p.R.resize(1, 1);
  p.R << 4;
  RescalParams lifted = hole_to_rescal(p);
  CHECK(lifted.dim() == 1);
  CHECK(score(lifted, 0, 0, 1) == 4.0 * 2.0 * -3.0);

  VerifyOptions opt;
  opt.trials = 100;
  TransformReport rep = verify_hole_to_rescal(opt);
  INFO(rep.failure);
  CHECK(rep.passed);
  CHECK(rep.max_rank_mismatch == 0);
  CHECK(rep.max_score_residual <= 1e-9);
}

TEST_CASE("distmult lift is the diagonal embedding") {
  DistmultParams p;
  p.A = Eigen::MatrixXd::Identity(2, 2);
  p.R.resize(1, 2);
  p.R << 1, 2;
  RescalParams lifted = distmult_to_rescal(p);
  Eigen::MatrixXd expected(2, 2);
  expected << 1, 0, 0, 2;
  CHECK(lifted.R[0] == expected);
  CHECK(lifted.dim() == 2);

  p.R << 0, 0;
  CHECK(distmult_to_rescal(p).R[0] == Eigen::MatrixXd::Zero(2, 2));

  VerifyOptions opt;
  opt.trials = 100;
  TransformReport rep = verify_distmult_to_rescal(opt);
  INFO(rep.failure);
  CHECK(rep.passed);
  CHECK(rep.max_rank_mismatch == 0);
  CHECK(rep.max_score_residual <= 1e-12);
}

TEST_CASE("complex lift block structure") {
  // zero imaginary parts reduce to diag(p) on the x block
  ComplexParams p;
  p.A_re.resize(2, 2);
  p.A_re << 1, 0, 0, 1;
  p.A_im = Eigen::MatrixXd::Zero(2, 2);
  p.R_re.resize(1, 2);
  p.R_re << 3, 4;
  p.R_im = Eigen::MatrixXd::Zero(1, 2);
  RescalParams lifted = complex_to_rescal(p);
  CHECK(lifted.dim() == 4);  // 2r
  CHECK(lifted.R[0].block(0, 0, 2, 2) == Eigen::MatrixXd(p.R_re.row(0).asDiagonal()));
  CHECK(lifted.R[0].block(0, 2, 2, 2) == Eigen::MatrixXd::Zero(2, 2));

  // the r=1 worked example: a_0 = 1, r = i, a_1 = i
  ComplexParams q;
  q.A_re.resize(2, 1);
  q.A_im.resize(2, 1);
  q.R_re.resize(1, 1);
  q.R_im.resize(1, 1);
  q.A_re << 1, 0;
  q.A_im << 0, 1;
  q.R_re << 0;
  q.R_im << 1;
  RescalParams rq = complex_to_rescal(q);
  CHECK(score(rq, 0, 0, 1) == -1.0);
  CHECK(score(rq, 0, 0, 1) == score(q, 0, 0, 1));

  VerifyOptions opt;
  opt.trials = 100;
  TransformReport rep = verify_complex_to_rescal(opt);
  INFO(rep.failure);
  CHECK(rep.passed);
  CHECK(rep.max_rank_mismatch == 0);
  CHECK(rep.max_score_residual <= 1e-12);
}

TEST_CASE("universal construction recovers ranking tensors") {
  RankingTensor ones{RankingMatrix::Ones(3, 3)};
  RescalParams m = rescal_universal(ones);
  CHECK(m.R[0] == Eigen::MatrixXd::Constant(3, 3, -1));
  CHECK(dense_rank(rescal_scores(m, 0)) == ones[0]);

  RankingMatrix slice(2, 2);
  slice << 2, 1, 3, 2;
  RescalParams m2 = rescal_universal({slice});
  CHECK(m2.dim() == 2);  // size N
  CHECK(dense_rank(rescal_scores(m2, 0)) == slice);

  RankingMatrix invalid(2, 2);
  invalid << 1, 3, 3, 1;  // not dense
  CHECK_THROWS_AS(rescal_universal({invalid}), std::invalid_argument);

  VerifyOptions opt;
  opt.trials = 50;
  opt.max_entities = 6;
  opt.max_relations = 3;
  TransformReport rep = verify_rescal_universal(opt);
  INFO(rep.failure);
  CHECK(rep.passed);
}

TEST_CASE("consistency construction rounds back to B") {
  BoolMatrix eye(2, 2);
  eye << 1, 0, 0, 1;
  std::vector<RoundingFactorization> fac(1);
  fac[0].L = Eigen::MatrixXd::Identity(2, 2);
  fac[0].Q = Eigen::MatrixXd::Identity(2, 2);
  RescalParams m = rescal_consistent({eye}, fac);
  Eigen::MatrixXd S = rescal_scores(m, 0);
  CHECK(S == Eigen::MatrixXd::Identity(2, 2));
  CHECK(round_tau(S) == eye);
  CHECK(is_consistent(S, eye));

  // all-zeros tensor with the zero factorization
  BoolMatrix zeros = BoolMatrix::Zero(3, 3);
  std::vector<RoundingFactorization> zfac(1);
  zfac[0].L = Eigen::MatrixXd::Zero(3, 1);
  zfac[0].Q = Eigen::MatrixXd::Zero(3, 1);
  RescalParams mz = rescal_consistent({zeros}, zfac);
  CHECK(round_tau(rescal_scores(mz, 0)) == zeros);

  // an invalid factorization names the failing slice
  std::vector<RoundingFactorization> bad(1);
  bad[0].L = Eigen::MatrixXd::Zero(2, 2);
  bad[0].Q = Eigen::MatrixXd::Zero(2, 2);
  try {
    rescal_consistent({eye}, bad);
    FAIL("expected invalid_argument");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("slice 0") != std::string::npos);
  }

  VerifyOptions opt;
  opt.trials = 50;
  opt.max_entities = 10;
  opt.max_relations = 3;
  TransformReport rep = verify_rescal_consistent(opt);
  INFO(rep.failure);
  CHECK(rep.passed);

  // trivial factorization has one L/Q pair of width N per slice
  RescalParams triv = rescal_consistent({eye});
  CHECK(triv.dim() == 2 * 2);
}

TEST_CASE("complex reconstruction of real matrices") {
  // symmetric boolean slice
  BoolMatrix eye(2, 2);
  eye << 1, 0, 0, 1;
  ComplexParams m = complex_consistent({eye});
  Eigen::MatrixXd rec = complex_hermitian_score_matrix(m, 0);
  CHECK((rec - eye.cast<double>()).cwiseAbs().maxCoeff() <= 1e-6);
  CHECK(is_consistent(rec, eye));

  // all-zeros slice is trivially consistent
  BoolMatrix zeros = BoolMatrix::Zero(3, 3);
  ComplexParams mz = complex_consistent({zeros});
  Eigen::MatrixXd recz = complex_hermitian_score_matrix(mz, 0);
  CHECK(recz.cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(is_consistent(recz, zeros));

  // random real 6x6 matrices: Z is normal and the reconstruction is tight
  Rng rng(55);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd S = test::random_matrix(6, 6, rng, -2, 2);
    Eigen::MatrixXcd Z =
        S.cast<std::complex<double>>() +
        std::complex<double>(0, 1) * S.transpose().cast<std::complex<double>>();
    CHECK((Z * Z.adjoint() - Z.adjoint() * Z).cwiseAbs().maxCoeff() <= 1e-9);

    ComplexParams mm = complex_reconstruction({S});
    Eigen::MatrixXd rr = complex_hermitian_score_matrix(mm, 0);
    CHECK((rr - S).cwiseAbs().maxCoeff() <= 1e-6);
  }

  VerifyOptions opt;
  opt.trials = 50;
  opt.max_entities = 6;
  TransformReport rep = verify_complex_consistent(opt);
  INFO(rep.failure);
  CHECK(rep.passed);
  CHECK(rep.max_score_residual <= 1e-6);
}

TEST_CASE("transe obstruction holds for random models, witness break it") {
  for (int t = 0; t < 10; ++t) {
    ModelParams m = init_params(ModelKind::TransE, 5, 2, 3, 700 + static_cast<uint64_t>(t));
    CHECK(check_transe_obstruction(std::get<TransEParams>(m)));
  }

  RescalParams witness = transe_obstruction_witness();
  Eigen::MatrixXd S = rescal_scores(witness, 0);
  CHECK(S(0, 0) == 1.0);
  CHECK(S(1, 1) == 0.0);
  RankingMatrix P = dense_rank(S);
  CHECK(P(0, 0) != P(1, 1));

  VerifyOptions opt;
  opt.trials = 100;
  TransformReport rep = verify_obstructions(opt);
  INFO(rep.failure);
  CHECK(rep.passed);
  CHECK(rep.note.find("pi_11") != std::string::npos);
}

TEST_CASE("distmult obstruction detects asymmetry") {
  BoolMatrix asym(2, 2);
  asym << 0, 1, 0, 0;
  CHECK(check_distmult_obstruction(asym));

  BoolMatrix sym(3, 3);
  sym << 1, 0, 1, 0, 1, 0, 1, 0, 0;
  CHECK_FALSE(check_distmult_obstruction(sym));

  Rng rng(66);
  for (int t = 0; t < 50; ++t) {
    int n = 2 + rng.uniform_int(5);
    BoolMatrix B(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) B(i, j) = rng.coin() ? 1 : 0;
    bool asymmetric = false;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) asymmetric = asymmetric || (B(i, j) != B(j, i));
    CHECK(check_distmult_obstruction(B) == asymmetric);
  }
}

TEST_CASE("report serialization carries the verdict") {
  VerifyOptions opt;
  opt.trials = 3;
  TransformReport rep = verify_distmult_to_rescal(opt);
  CHECK(rep.to_text().find("PASS") != std::string::npos);
  bool saw_passed = false;
  for (const auto& [k, v] : rep.to_kv()) {
    if (k == "passed") {
      saw_passed = true;
      CHECK(v == "1");
    }
  }
  CHECK(saw_passed);
}
