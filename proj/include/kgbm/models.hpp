#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "kgbm/util.hpp"

namespace kgbm {

enum class ModelKind : uint8_t {
  Rescal = 0,
  Distmult = 1,
  HolE = 2,
  Complex = 3,
  TransE = 4,
};

const char* to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

// Entity rows a_i, one full r x r relation matrix per relation.
struct RescalParams {
  Eigen::MatrixXd A;                // N x r
  std::vector<Eigen::MatrixXd> R;   // K matrices, r x r

  int num_entities() const { return static_cast<int>(A.rows()); }
  int num_relations() const { return static_cast<int>(R.size()); }
  int dim() const { return static_cast<int>(A.cols()); }
};

struct DistmultParams {
  Eigen::MatrixXd A;  // N x r
  Eigen::MatrixXd R;  // K x r

  int num_entities() const { return static_cast<int>(A.rows()); }
  int num_relations() const { return static_cast<int>(R.rows()); }
  int dim() const { return static_cast<int>(A.cols()); }
};

struct HolEParams {
  Eigen::MatrixXd A;  // N x r
  Eigen::MatrixXd R;  // K x r

  int num_entities() const { return static_cast<int>(A.rows()); }
  int num_relations() const { return static_cast<int>(R.rows()); }
  int dim() const { return static_cast<int>(A.cols()); }
};

// Complex embeddings kept as separate real/imaginary arrays so gradient and
// optimizer state share one layout with the real-valued models.
struct ComplexParams {
  Eigen::MatrixXd A_re, A_im;  // N x r each
  Eigen::MatrixXd R_re, R_im;  // K x r each

  int num_entities() const { return static_cast<int>(A_re.rows()); }
  int num_relations() const { return static_cast<int>(R_re.rows()); }
  int dim() const { return static_cast<int>(A_re.cols()); }
};

struct TransEParams {
  Eigen::MatrixXd A;  // N x r
  Eigen::MatrixXd R;  // K x r

  int num_entities() const { return static_cast<int>(A.rows()); }
  int num_relations() const { return static_cast<int>(R.rows()); }
  int dim() const { return static_cast<int>(A.cols()); }
};

using ModelParams =
    std::variant<RescalParams, DistmultParams, HolEParams, ComplexParams, TransEParams>;

ModelKind kind_of(const ModelParams& m);
int num_entities(const ModelParams& m);
int num_relations(const ModelParams& m);
int dim(const ModelParams& m);

// --- circular correlation / convolution ------------------------------------
//
// (a star b)_k = sum_t a_t b_{(k+t) mod r}   (correlation, HolE's operator)
// (a conv b)_k = sum_t a_t b_{(k-t) mod r}   (convolution, used by gradients)
//
// The FFT path is used for r >= kFftThreshold; below that the naive loops
// win on constant factors and double as the oracle.
inline constexpr int kFftThreshold = 32;

Eigen::VectorXd circular_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b);
Eigen::VectorXd circular_correlation_naive(const Eigen::VectorXd& a, const Eigen::VectorXd& b);
Eigen::VectorXd circular_correlation_fft(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

Eigen::VectorXd circular_convolution(const Eigen::VectorXd& a, const Eigen::VectorXd& b);
Eigen::VectorXd circular_convolution_naive(const Eigen::VectorXd& a, const Eigen::VectorXd& b);
Eigen::VectorXd circular_convolution_fft(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// --- scoring ----------------------------------------------------------------

double score(const RescalParams& p, int i, int k, int j);   // a_i^T R_k a_j
double score(const DistmultParams& p, int i, int k, int j); // a_i^T diag(r_k) a_j
double score(const HolEParams& p, int i, int k, int j);     // r_k^T (a_i star a_j)
double score(const ComplexParams& p, int i, int k, int j);  // Re(a_i^T diag(r_k) a_j)
double score(const TransEParams& p, int i, int k, int j);   // -|a_i + r_k - a_j|^2
double score(const ModelParams& m, int i, int k, int j);

// Full N x N score matrix of relation k.
Eigen::MatrixXd score_matrix(const ModelParams& m, int k);

// s(i,k,j) over all i (resp. all j) with the other two indices fixed,
// computed with matrix-vector products.
Eigen::VectorXd score_subjects(const ModelParams& m, int k, int j);
Eigen::VectorXd score_objects(const ModelParams& m, int i, int k);

// --- gradients of the score -------------------------------------------------

struct RescalGrad {
  Eigen::VectorXd subject;   // d s / d a_i
  Eigen::VectorXd object;    // d s / d a_j
  Eigen::MatrixXd relation;  // d s / d R_k
};

struct VectorModelGrad {
  Eigen::VectorXd subject, object, relation;
};

struct ComplexGrad {
  Eigen::VectorXd subject_re, subject_im;
  Eigen::VectorXd object_re, object_im;
  Eigen::VectorXd relation_re, relation_im;
};

RescalGrad grad(const RescalParams& p, int i, int k, int j);
VectorModelGrad grad(const DistmultParams& p, int i, int k, int j);
VectorModelGrad grad(const HolEParams& p, int i, int k, int j);
ComplexGrad grad(const ComplexParams& p, int i, int k, int j);
VectorModelGrad grad(const TransEParams& p, int i, int k, int j);

// --- initialization ----------------------------------------------------------

// Entries i.i.d. uniform on [-1/sqrt(r), +1/sqrt(r)]; the same seed yields
// bit-identical parameters. Throws on r < 1.
ModelParams init_params(ModelKind kind, int n_entities, int n_relations, int r,
                        uint64_t seed);

// --- serialization ------------------------------------------------------------
//
// Little-endian binary: magic "KGBM", u32 version = 1, u8 model kind,
// u32 N, u32 K, u32 r, then the parameter arrays as f64 row-major in field
// order. A text sidecar `<path>.meta` carries hyperparameters and the
// dataset checksum.

void save_model(const std::string& path, const ModelParams& m, const KvList& sidecar);
ModelParams load_model(const std::string& path);
std::string sidecar_path(const std::string& model_path);
KvMap load_model_sidecar(const std::string& model_path);

// --- instrumentation -----------------------------------------------------------

// Count of inner-loop multiplies performed by single-triple score() calls on
// this thread. Used to assert per-step cost scaling in tests.
uint64_t score_op_count();
void reset_score_op_count();

}  // namespace kgbm
