#include "kgbm/transforms.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace kgbm {

namespace {

Eigen::IOFormat kDumpFmt(Eigen::FullPrecision, 0, " ", "\n", "  [", "]");

std::string dump_matrix(const Eigen::MatrixXd& m) {
  std::ostringstream os;
  os << m.format(kDumpFmt);
  return os.str();
}

}  // namespace

std::string TransformReport::to_text() const {
  std::ostringstream os;
  os << name << ": " << (passed ? "PASS" : "FAIL") << "\n"
     << "  source: " << source << " (size " << source_dim << ")\n"
     << "  target: " << target << " (size " << target_dim << ")\n"
     << "  trials: " << trials << "\n"
     << "  max rank mismatch: " << max_rank_mismatch << "\n"
     << "  max score residual: " << max_score_residual << "\n";
  if (!note.empty()) os << "  note: " << note << "\n";
  if (!failure.empty()) os << "  failure: " << failure << "\n";
  return os.str();
}

KvList TransformReport::to_kv() const {
  std::ostringstream res;
  res << max_score_residual;
  KvList kv{
      {"theorem", name},
      {"source", source},
      {"source_dim", std::to_string(source_dim)},
      {"target", target},
      {"target_dim", std::to_string(target_dim)},
      {"trials", std::to_string(trials)},
      {"max_rank_mismatch", std::to_string(max_rank_mismatch)},
      {"max_score_residual", res.str()},
      {"passed", passed ? "1" : "0"},
  };
  if (!note.empty()) kv.emplace_back("note", note);
  return kv;
}

// --- constructions ---------------------------------------------------------

RescalParams transe_to_rescal(const TransEParams& p) {
  const int n = p.num_entities(), k = p.num_relations(), r = p.dim();
  const int rr = 2 * r + 1;

  RescalParams out;
  out.A.resize(n, rr);
  for (int i = 0; i < n; ++i) {
    out.A.row(i).segment(0, r).setOnes();
    out.A.row(i).segment(r, r) = p.A.row(i);
    out.A(i, 2 * r) = p.A.row(i).squaredNorm();
  }

  out.R.reserve(static_cast<size_t>(k));
  for (int s = 0; s < k; ++s) {
    Eigen::MatrixXd Rk = Eigen::MatrixXd::Zero(rr, rr);
    for (int t = 0; t < r; ++t) {
      Rk(t, r + t) = 2.0 * p.R(s, t);   // -(-2 diag(r_k))
      Rk(r + t, t) = -2.0 * p.R(s, t);  // -(2 diag(r_k))
      Rk(r + t, r + t) = 2.0;           // -(-2 I)
    }
    Rk(0, 2 * r) = -1.0;  // -e_{1,r} column block
    Rk(2 * r, 0) = -1.0;  // -e_{1,r}^T row block
    out.R.push_back(std::move(Rk));
  }
  return out;
}

Eigen::MatrixXd circulant_from_row(const Eigen::VectorXd& r) {
  const Eigen::Index n = r.size();
  Eigen::MatrixXd C(n, n);
  for (Eigen::Index t = 0; t < n; ++t)
    for (Eigen::Index u = 0; u < n; ++u) C(t, u) = r[((u - t) % n + n) % n];
  return C;
}

RescalParams hole_to_rescal(const HolEParams& p) {
  RescalParams out;
  out.A = p.A;
  out.R.reserve(static_cast<size_t>(p.num_relations()));
  for (int k = 0; k < p.num_relations(); ++k) {
    out.R.push_back(circulant_from_row(p.R.row(k).transpose()));
  }
  return out;
}

RescalParams distmult_to_rescal(const DistmultParams& p) {
  RescalParams out;
  out.A = p.A;
  out.R.reserve(static_cast<size_t>(p.num_relations()));
  for (int k = 0; k < p.num_relations(); ++k) {
    out.R.push_back(Eigen::MatrixXd(p.R.row(k).asDiagonal()));
  }
  return out;
}

RescalParams complex_to_rescal(const ComplexParams& p) {
  const int n = p.num_entities(), kk = p.num_relations(), r = p.dim();
  RescalParams out;
  out.A.resize(n, 2 * r);
  out.A << p.A_re, p.A_im;

  out.R.reserve(static_cast<size_t>(kk));
  for (int k = 0; k < kk; ++k) {
    Eigen::MatrixXd Rk = Eigen::MatrixXd::Zero(2 * r, 2 * r);
    for (int t = 0; t < r; ++t) {
      Rk(t, t) = p.R_re(k, t);
      Rk(t, r + t) = -p.R_im(k, t);
      Rk(r + t, t) = -p.R_im(k, t);
      Rk(r + t, r + t) = -p.R_re(k, t);
    }
    out.R.push_back(std::move(Rk));
  }
  return out;
}

RescalParams rescal_universal(const RankingTensor& P) {
  if (!is_valid_ranking_tensor(P)) {
    throw std::invalid_argument("rescal_universal: input is not a valid ranking tensor");
  }
  const Eigen::Index n = P[0].rows();
  RescalParams out;
  out.A = Eigen::MatrixXd::Identity(n, n);
  out.R.reserve(P.size());
  for (const RankingMatrix& slice : P) out.R.push_back(-slice.cast<double>());
  return out;
}

RescalParams rescal_consistent(const BoolTensor& B) {
  std::vector<RoundingFactorization> trivial;
  trivial.reserve(B.size());
  for (const BoolMatrix& slice : B) {
    RoundingFactorization f;
    f.L = Eigen::MatrixXd::Identity(slice.rows(), slice.rows());
    f.Q = slice.cast<double>().transpose();
    trivial.push_back(std::move(f));
  }
  return rescal_consistent(B, trivial);
}

RescalParams rescal_consistent(const BoolTensor& B,
                               const std::vector<RoundingFactorization>& factors) {
  if (B.empty()) throw std::invalid_argument("rescal_consistent: empty tensor");
  if (factors.size() != B.size()) {
    throw std::invalid_argument("rescal_consistent: one factorization per slice required");
  }
  const Eigen::Index n = B[0].rows();
  const int kk = static_cast<int>(B.size());

  std::vector<int> ranks(static_cast<size_t>(kk));
  int total = 0;
  for (int k = 0; k < kk; ++k) {
    const auto& f = factors[static_cast<size_t>(k)];
    if (f.L.rows() != n || f.Q.rows() != n || f.L.cols() != f.Q.cols()) {
      throw std::invalid_argument("rescal_consistent: bad factorization shape in slice " +
                                  std::to_string(k));
    }
    if (round_tau(Eigen::MatrixXd(f.L * f.Q.transpose())) != B[static_cast<size_t>(k)]) {
      throw std::invalid_argument(
          "rescal_consistent: factorization does not round to slice " + std::to_string(k));
    }
    ranks[static_cast<size_t>(k)] = static_cast<int>(f.L.cols());
    total += 2 * ranks[static_cast<size_t>(k)];
  }

  RescalParams out;
  out.A = Eigen::MatrixXd::Zero(n, total);
  int off = 0;
  for (int k = 0; k < kk; ++k) {
    const int rk = ranks[static_cast<size_t>(k)];
    out.A.block(0, off, n, rk) = factors[static_cast<size_t>(k)].L;
    out.A.block(0, off + rk, n, rk) = factors[static_cast<size_t>(k)].Q;
    off += 2 * rk;
  }

  off = 0;
  for (int k = 0; k < kk; ++k) {
    const int rk = ranks[static_cast<size_t>(k)];
    Eigen::MatrixXd Rk = Eigen::MatrixXd::Zero(total, total);
    Rk.block(off, off + rk, rk, rk) = Eigen::MatrixXd::Identity(rk, rk);
    out.R.push_back(std::move(Rk));
    off += 2 * rk;
  }
  return out;
}

namespace {

// Sequential modified Gram-Schmidt with a re-orthogonalization pass.
Eigen::MatrixXcd orthonormalize_columns(Eigen::MatrixXcd V) {
  for (Eigen::Index c = 0; c < V.cols(); ++c) {
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index p = 0; p < c; ++p) {
        V.col(c) -= V.col(p).dot(V.col(c)) * V.col(p);
      }
    }
    double norm = V.col(c).norm();
    if (norm < 1e-12) {
      throw std::runtime_error("eigendecomposition produced a degenerate basis");
    }
    V.col(c) /= norm;
  }
  return V;
}

}  // namespace

ComplexParams complex_reconstruction(const ScoreTensor& S) {
  if (S.empty()) throw std::invalid_argument("complex_reconstruction: empty tensor");
  const Eigen::Index n = S[0].rows();
  const int kk = static_cast<int>(S.size());
  const Eigen::Index total = n * kk;

  ComplexParams out;
  out.A_re = Eigen::MatrixXd::Zero(n, total);
  out.A_im = Eigen::MatrixXd::Zero(n, total);
  out.R_re = Eigen::MatrixXd::Zero(kk, total);
  out.R_im = Eigen::MatrixXd::Zero(kk, total);

  for (int k = 0; k < kk; ++k) {
    const Eigen::MatrixXd& Sk = S[static_cast<size_t>(k)];
    Eigen::MatrixXcd Z =
        Sk.cast<std::complex<double>>() +
        std::complex<double>(0, 1) * Sk.transpose().cast<std::complex<double>>();

    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(Z);
    if (es.info() != Eigen::Success) {
      throw std::runtime_error(
          "complex_reconstruction: eigendecomposition failed on slice " +
          std::to_string(k));
    }
    Eigen::MatrixXcd U = orthonormalize_columns(es.eigenvectors());
    double unit_residual =
        (U.adjoint() * U - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff();
    if (unit_residual > 1e-10) {
      throw std::runtime_error(
          "complex_reconstruction: could not restore unitarity on slice " +
          std::to_string(k));
    }

    out.A_re.block(0, n * k, n, n) = U.real();
    out.A_im.block(0, n * k, n, n) = U.imag();
    out.R_re.row(k).segment(n * k, n) = es.eigenvalues().real();
    out.R_im.row(k).segment(n * k, n) = es.eigenvalues().imag();
  }
  return out;
}

ComplexParams complex_consistent(const BoolTensor& B) {
  ScoreTensor S;
  S.reserve(B.size());
  for (const BoolMatrix& slice : B) S.push_back(slice.cast<double>());
  return complex_reconstruction(S);
}

Eigen::MatrixXd complex_hermitian_score_matrix(const ComplexParams& p, int k) {
  Eigen::MatrixXcd A =
      p.A_re.cast<std::complex<double>>() +
      std::complex<double>(0, 1) * p.A_im.cast<std::complex<double>>();
  Eigen::VectorXcd d =
      (p.R_re.row(k).cast<std::complex<double>>() +
       std::complex<double>(0, 1) * p.R_im.row(k).cast<std::complex<double>>())
          .transpose();
  return (A * d.asDiagonal() * A.adjoint()).real();
}

bool check_transe_obstruction(const TransEParams& p) {
  const int n = p.num_entities();
  for (int k = 0; k < p.num_relations(); ++k) {
    Eigen::MatrixXd S(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) S(i, j) = score(p, i, k, j);
    RankingMatrix P = dense_rank(S);
    for (int i = 1; i < n; ++i) {
      if (P(i, i) != P(0, 0)) return false;
    }
  }
  return true;
}

RescalParams transe_obstruction_witness() {
  RescalParams w;
  w.A = Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd R1(2, 2);
  R1 << 1, 1, 1, 0;
  w.R.push_back(R1);
  return w;
}

bool check_distmult_obstruction(const BoolMatrix& B) {
  for (Eigen::Index i = 0; i < B.rows(); ++i)
    for (Eigen::Index j = i + 1; j < B.cols(); ++j)
      if (B(i, j) != B(j, i)) return true;
  return false;
}

// --- verification drivers -----------------------------------------------------

namespace {

// Verification params are drawn on a dyadic grid (multiples of 1/16 in
// [-1,1]). Every score both routes compute is then a small dyadic rational
// that doubles represent exactly, so tie structure and score identities are
// exact and rank comparisons are meaningful.
double grid_draw(Rng& rng) { return (rng.uniform_int(33) - 16) / 16.0; }

void fill_grid(Eigen::MatrixXd& m, Rng& rng) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = grid_draw(rng);
}

struct TrialShape {
  int n, k, r;
};

TrialShape draw_shape(Rng& rng, const VerifyOptions& opt) {
  TrialShape s;
  s.n = 2 + rng.uniform_int(std::max(1, opt.max_entities - 1));
  s.k = 1 + rng.uniform_int(std::max(1, opt.max_relations));
  s.r = 1 + rng.uniform_int(std::max(1, opt.max_dim));
  return s;
}

Eigen::MatrixXd rescal_score_matrix(const RescalParams& p, int k) {
  const int n = p.num_entities();
  Eigen::MatrixXd S(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) S(i, j) = score(p, i, k, j);
  return S;
}

int count_rank_mismatches(const Eigen::MatrixXd& S1, const Eigen::MatrixXd& S2) {
  RankingMatrix p1 = dense_rank(S1), p2 = dense_rank(S2);
  int mismatches = 0;
  for (Eigen::Index i = 0; i < p1.rows(); ++i)
    for (Eigen::Index j = 0; j < p1.cols(); ++j)
      if (p1(i, j) != p2(i, j)) ++mismatches;
  return static_cast<int>(mismatches);
}

void record_failure(TransformReport& rep, uint64_t trial_seed, int k,
                    const Eigen::MatrixXd& expected, const Eigen::MatrixXd& actual) {
  if (!rep.failure.empty()) return;
  std::ostringstream os;
  os << "seed=" << trial_seed << " relation=" << k << "\nexpected scores:\n"
     << dump_matrix(expected) << "\nactual scores:\n" << dump_matrix(actual);
  rep.failure = os.str();
  rep.passed = false;
}

}  // namespace

TransformReport verify_transe_to_rescal(const VerifyOptions& opt) {
  TransformReport rep;
  rep.name = "transe-to-rescal";
  rep.source = "transe";
  rep.target = "rescal";
  rep.trials = opt.trials;

  for (int t = 0; t < opt.trials; ++t) {
    const uint64_t trial_seed = opt.seed + static_cast<uint64_t>(t);
    Rng rng(trial_seed);
    TrialShape sh = draw_shape(rng, opt);

    TransEParams p;
    p.A.resize(sh.n, sh.r);
    p.R.resize(sh.k, sh.r);
    fill_grid(p.A, rng);
    fill_grid(p.R, rng);
    rep.source_dim = sh.r;

    RescalParams lifted = transe_to_rescal(p);
    rep.target_dim = lifted.dim();

    for (int k = 0; k < sh.k; ++k) {
      Eigen::MatrixXd St(sh.n, sh.n);
      for (int i = 0; i < sh.n; ++i)
        for (int j = 0; j < sh.n; ++j) St(i, j) = score(p, i, k, j);
      Eigen::MatrixXd Sr = rescal_score_matrix(lifted, k);

      const double ck = p.R.row(k).squaredNorm();
      double residual =
          (Sr - St - Eigen::MatrixXd::Constant(sh.n, sh.n, ck)).cwiseAbs().maxCoeff();
      rep.max_score_residual = std::max(rep.max_score_residual, residual);

      int mism = count_rank_mismatches(St, Sr);
      rep.max_rank_mismatch = std::max(rep.max_rank_mismatch, mism);
      if (mism != 0 || residual > 1e-9) record_failure(rep, trial_seed, k, St, Sr);
    }
  }
  rep.passed = rep.failure.empty();
  return rep;
}

TransformReport verify_hole_to_rescal(const VerifyOptions& opt) {
  TransformReport rep;
  rep.name = "hole-to-rescal";
  rep.source = "hole";
  rep.target = "rescal";
  rep.trials = opt.trials;

  for (int t = 0; t < opt.trials; ++t) {
    const uint64_t trial_seed = opt.seed + static_cast<uint64_t>(t);
    Rng rng(trial_seed);
    TrialShape sh = draw_shape(rng, opt);

    HolEParams p;
    p.A.resize(sh.n, sh.r);
    p.R.resize(sh.k, sh.r);
    fill_grid(p.A, rng);
    fill_grid(p.R, rng);
    rep.source_dim = sh.r;

    RescalParams lifted = hole_to_rescal(p);
    rep.target_dim = lifted.dim();

    for (int k = 0; k < sh.k; ++k) {
      Eigen::MatrixXd Sh(sh.n, sh.n);
      for (int i = 0; i < sh.n; ++i) {
        for (int j = 0; j < sh.n; ++j) {
          // naive correlation is the oracle path and exact on grid draws
          Sh(i, j) = p.R.row(k) * circular_correlation_naive(p.A.row(i).transpose(),
                                                             p.A.row(j).transpose());
        }
      }
      Eigen::MatrixXd Sr = rescal_score_matrix(lifted, k);

      double residual = (Sr - Sh).cwiseAbs().maxCoeff();
      rep.max_score_residual = std::max(rep.max_score_residual, residual);
      int mism = count_rank_mismatches(Sh, Sr);
      rep.max_rank_mismatch = std::max(rep.max_rank_mismatch, mism);
      if (mism != 0 || residual > 1e-9) record_failure(rep, trial_seed, k, Sh, Sr);
    }
  }
  rep.passed = rep.failure.empty();
  return rep;
}

TransformReport verify_distmult_to_rescal(const VerifyOptions& opt) {
  TransformReport rep;
  rep.name = "distmult-to-rescal";
  rep.source = "distmult";
  rep.target = "rescal";
  rep.trials = opt.trials;

  for (int t = 0; t < opt.trials; ++t) {
    const uint64_t trial_seed = opt.seed + static_cast<uint64_t>(t);
    Rng rng(trial_seed);
    TrialShape sh = draw_shape(rng, opt);

    DistmultParams p;
    p.A.resize(sh.n, sh.r);
    p.R.resize(sh.k, sh.r);
    fill_grid(p.A, rng);
    fill_grid(p.R, rng);
    rep.source_dim = sh.r;

    RescalParams lifted = distmult_to_rescal(p);
    rep.target_dim = lifted.dim();

    for (int k = 0; k < sh.k; ++k) {
      Eigen::MatrixXd Sd(sh.n, sh.n);
      for (int i = 0; i < sh.n; ++i)
        for (int j = 0; j < sh.n; ++j) Sd(i, j) = score(p, i, k, j);
      Eigen::MatrixXd Sr = rescal_score_matrix(lifted, k);

      double residual = (Sr - Sd).cwiseAbs().maxCoeff();
      rep.max_score_residual = std::max(rep.max_score_residual, residual);
      int mism = count_rank_mismatches(Sd, Sr);
      rep.max_rank_mismatch = std::max(rep.max_rank_mismatch, mism);
      if (mism != 0 || residual > 1e-12) record_failure(rep, trial_seed, k, Sd, Sr);
    }
  }
  rep.passed = rep.failure.empty();
  return rep;
}

TransformReport verify_complex_to_rescal(const VerifyOptions& opt) {
  TransformReport rep;
  rep.name = "complex-to-rescal";
  rep.source = "complex";
  rep.target = "rescal";
  rep.trials = opt.trials;
  rep.note = "direct 2r real block construction; subsumption bound via circulant route is 2r+1";

  for (int t = 0; t < opt.trials; ++t) {
    const uint64_t trial_seed = opt.seed + static_cast<uint64_t>(t);
    Rng rng(trial_seed);
    TrialShape sh = draw_shape(rng, opt);

    ComplexParams p;
    p.A_re.resize(sh.n, sh.r);
    p.A_im.resize(sh.n, sh.r);
    p.R_re.resize(sh.k, sh.r);
    p.R_im.resize(sh.k, sh.r);
    fill_grid(p.A_re, rng);
    fill_grid(p.A_im, rng);
    fill_grid(p.R_re, rng);
    fill_grid(p.R_im, rng);
    rep.source_dim = sh.r;

    RescalParams lifted = complex_to_rescal(p);
    rep.target_dim = lifted.dim();

    for (int k = 0; k < sh.k; ++k) {
      Eigen::MatrixXd Sc(sh.n, sh.n);
      for (int i = 0; i < sh.n; ++i)
        for (int j = 0; j < sh.n; ++j) Sc(i, j) = score(p, i, k, j);
      Eigen::MatrixXd Sr = rescal_score_matrix(lifted, k);

      double residual = (Sr - Sc).cwiseAbs().maxCoeff();
      rep.max_score_residual = std::max(rep.max_score_residual, residual);
      int mism = count_rank_mismatches(Sc, Sr);
      rep.max_rank_mismatch = std::max(rep.max_rank_mismatch, mism);
      if (mism != 0 || residual > 1e-12) record_failure(rep, trial_seed, k, Sc, Sr);
    }
  }
  rep.passed = rep.failure.empty();
  return rep;
}

TransformReport verify_rescal_universal(const VerifyOptions& opt) {
  TransformReport rep;
  rep.name = "universal";
  rep.source = "ranking tensor";
  rep.target = "rescal";
  rep.trials = opt.trials;

  for (int t = 0; t < opt.trials; ++t) {
    const uint64_t trial_seed = opt.seed + static_cast<uint64_t>(t);
    Rng rng(trial_seed);
    TrialShape sh = draw_shape(rng, opt);
    rep.source_dim = sh.n;

    RankingTensor P;
    for (int k = 0; k < sh.k; ++k) {
      Eigen::MatrixXd S(sh.n, sh.n);
      for (int i = 0; i < sh.n; ++i)
        for (int j = 0; j < sh.n; ++j) S(i, j) = rng.uniform(-1.0, 1.0);
      P.push_back(dense_rank(S));
    }

    RescalParams m = rescal_universal(P);
    rep.target_dim = m.dim();

    for (int k = 0; k < sh.k; ++k) {
      Eigen::MatrixXd S = rescal_score_matrix(m, k);
      RankingMatrix recovered = dense_rank(S);
      if (recovered != P[static_cast<size_t>(k)]) {
        rep.max_rank_mismatch =
            std::max(rep.max_rank_mismatch,
                     count_rank_mismatches(S, -P[static_cast<size_t>(k)].cast<double>()));
        record_failure(rep, trial_seed, k, P[static_cast<size_t>(k)].cast<double>(),
                       recovered.cast<double>());
      }
    }
  }
  rep.passed = rep.failure.empty();
  return rep;
}

TransformReport verify_rescal_consistent(const VerifyOptions& opt) {
  TransformReport rep;
  rep.name = "consistent";
  rep.source = "boolean tensor";
  rep.target = "rescal";
  rep.trials = opt.trials;

  for (int t = 0; t < opt.trials; ++t) {
    const uint64_t trial_seed = opt.seed + static_cast<uint64_t>(t);
    Rng rng(trial_seed);
    TrialShape sh = draw_shape(rng, opt);
    rep.source_dim = sh.n;

    BoolTensor B;
    for (int k = 0; k < sh.k; ++k) {
      BoolMatrix slice(sh.n, sh.n);
      for (int i = 0; i < sh.n; ++i)
        for (int j = 0; j < sh.n; ++j) slice(i, j) = rng.coin() ? 1 : 0;
      B.push_back(std::move(slice));
    }

    RescalParams m = rescal_consistent(B);
    rep.target_dim = m.dim();

    for (int k = 0; k < sh.k; ++k) {
      Eigen::MatrixXd S = rescal_score_matrix(m, k);
      BoolMatrix rounded = round_tau(S);
      const BoolMatrix& expect = B[static_cast<size_t>(k)];
      bool consistent = is_consistent(S, expect);
      if (rounded != expect || !consistent) {
        rep.max_rank_mismatch += 1;
        record_failure(rep, trial_seed, k, expect.cast<double>(), S);
      }
    }
  }
  rep.passed = rep.failure.empty();
  return rep;
}

TransformReport verify_complex_consistent(const VerifyOptions& opt) {
  TransformReport rep;
  rep.name = "complex-consistent";
  rep.source = "boolean tensor";
  rep.target = "complex";
  rep.trials = opt.trials;

  for (int t = 0; t < opt.trials; ++t) {
    const uint64_t trial_seed = opt.seed + static_cast<uint64_t>(t);
    Rng rng(trial_seed);
    TrialShape sh = draw_shape(rng, opt);
    rep.source_dim = sh.n;

    BoolTensor B;
    for (int k = 0; k < sh.k; ++k) {
      BoolMatrix slice(sh.n, sh.n);
      for (int i = 0; i < sh.n; ++i)
        for (int j = 0; j < sh.n; ++j) slice(i, j) = rng.coin() ? 1 : 0;
      B.push_back(std::move(slice));
    }

    // normality of Z = S + i S^T, checked on the raw construction input
    for (int k = 0; k < sh.k; ++k) {
      Eigen::MatrixXd S = B[static_cast<size_t>(k)].cast<double>();
      Eigen::MatrixXcd Z =
          S.cast<std::complex<double>>() +
          std::complex<double>(0, 1) * S.transpose().cast<std::complex<double>>();
      double normality = (Z * Z.adjoint() - Z.adjoint() * Z).cwiseAbs().maxCoeff();
      if (normality > 1e-9) {
        rep.max_rank_mismatch += 1;
        record_failure(rep, trial_seed, k, S, S);
      }
    }

    ComplexParams m = complex_consistent(B);
    rep.target_dim = m.dim();

    for (int k = 0; k < sh.k; ++k) {
      Eigen::MatrixXd S = B[static_cast<size_t>(k)].cast<double>();
      Eigen::MatrixXd rec = complex_hermitian_score_matrix(m, k);
      double residual = (rec - S).cwiseAbs().maxCoeff();
      rep.max_score_residual = std::max(rep.max_score_residual, residual);
      bool consistent = is_consistent(rec, B[static_cast<size_t>(k)]);
      if (residual > 1e-6 || !consistent) {
        rep.max_rank_mismatch += 1;
        record_failure(rep, trial_seed, k, S, rec);
      }
    }
  }
  rep.passed = rep.failure.empty();
  return rep;
}

TransformReport verify_obstructions(const VerifyOptions& opt) {
  TransformReport rep;
  rep.name = "obstructions";
  rep.source = "transe/distmult";
  rep.target = "rescal witness";
  rep.trials = opt.trials;

  for (int t = 0; t < opt.trials; ++t) {
    const uint64_t trial_seed = opt.seed + static_cast<uint64_t>(t);
    Rng rng(trial_seed);
    TrialShape sh = draw_shape(rng, opt);

    auto tp = init_params(ModelKind::TransE, sh.n, sh.k, sh.r, trial_seed);
    if (!check_transe_obstruction(std::get<TransEParams>(tp))) {
      rep.max_rank_mismatch += 1;
      rep.passed = false;
      if (rep.failure.empty()) {
        rep.failure = "seed=" + std::to_string(trial_seed) +
                      " transe diagonal ranks not constant";
      }
    }

    auto dp = init_params(ModelKind::Distmult, sh.n, sh.k, sh.r, trial_seed + 1);
    const auto& d = std::get<DistmultParams>(dp);
    for (int k = 0; k < sh.k; ++k) {
      Eigen::MatrixXd S(sh.n, sh.n);
      for (int i = 0; i < sh.n; ++i)
        for (int j = 0; j < sh.n; ++j) S(i, j) = score(d, i, k, j);
      if (S != Eigen::MatrixXd(S.transpose())) {
        rep.max_rank_mismatch += 1;
        record_failure(rep, trial_seed, k, S.transpose(), S);
      }
    }
  }

  // The certificate separating RESCAL from TransE: distinct diagonal ranks.
  RescalParams witness = transe_obstruction_witness();
  Eigen::MatrixXd S = rescal_score_matrix(witness, 0);
  RankingMatrix P = dense_rank(S);
  std::ostringstream os;
  os << "witness A:\n" << dump_matrix(witness.A) << "\nwitness R_1:\n"
     << dump_matrix(witness.R[0]) << "\nscores:\n" << dump_matrix(S)
     << "\nranks: pi_11=" << P(0, 0) << " pi_22=" << P(1, 1);
  rep.note = os.str();
  if (P(0, 0) == P(1, 1)) {
    rep.passed = false;
    rep.failure = "witness diagonal ranks unexpectedly equal";
  }
  rep.passed = rep.passed && rep.failure.empty();
  return rep;
}

std::vector<TransformReport> verify_all(const VerifyOptions& opt) {
  return {verify_transe_to_rescal(opt), verify_hole_to_rescal(opt),
          verify_distmult_to_rescal(opt), verify_complex_to_rescal(opt),
          verify_rescal_universal(opt),  verify_rescal_consistent(opt),
          verify_complex_consistent(opt), verify_obstructions(opt)};
}

}  // namespace kgbm
