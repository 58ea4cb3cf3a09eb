#include "kgbm/models.hpp"

#include <unsupported/Eigen/FFT>

#include <bit>
#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "model files are little-endian; big-endian hosts are unsupported");

namespace kgbm {

namespace {

thread_local uint64_t g_score_ops = 0;

void count_ops(uint64_t n) { g_score_ops += n; }

thread_local Eigen::FFT<double> g_fft;

std::vector<std::complex<double>> fwd_fft(const Eigen::VectorXd& v) {
  std::vector<double> in(v.data(), v.data() + v.size());
  std::vector<std::complex<double>> out;
  g_fft.fwd(out, in);
  return out;
}

Eigen::VectorXd inv_fft_real(std::vector<std::complex<double>>& spec) {
  std::vector<std::complex<double>> out;
  g_fft.inv(out, spec);
  Eigen::VectorXd res(static_cast<Eigen::Index>(out.size()));
  for (size_t i = 0; i < out.size(); ++i) res[static_cast<Eigen::Index>(i)] = out[i].real();
  return res;
}

void check_same_length(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("circular correlation: length mismatch");
  }
}

}  // namespace

uint64_t score_op_count() { return g_score_ops; }
void reset_score_op_count() { g_score_ops = 0; }

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Rescal: return "rescal";
    case ModelKind::Distmult: return "distmult";
    case ModelKind::HolE: return "hole";
    case ModelKind::Complex: return "complex";
    case ModelKind::TransE: return "transe";
  }
  return "?";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "rescal") return ModelKind::Rescal;
  if (name == "distmult") return ModelKind::Distmult;
  if (name == "hole") return ModelKind::HolE;
  if (name == "complex") return ModelKind::Complex;
  if (name == "transe") return ModelKind::TransE;
  throw std::invalid_argument("unknown model kind: " + name);
}

ModelKind kind_of(const ModelParams& m) {
  return static_cast<ModelKind>(m.index());
}

int num_entities(const ModelParams& m) {
  return std::visit([](const auto& p) { return p.num_entities(); }, m);
}

int num_relations(const ModelParams& m) {
  return std::visit([](const auto& p) { return p.num_relations(); }, m);
}

int dim(const ModelParams& m) {
  return std::visit([](const auto& p) { return p.dim(); }, m);
}

// --- correlation / convolution ----------------------------------------------

Eigen::VectorXd circular_correlation_naive(const Eigen::VectorXd& a,
                                           const Eigen::VectorXd& b) {
  check_same_length(a, b);
  const Eigen::Index r = a.size();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(r);
  for (Eigen::Index k = 0; k < r; ++k) {
    double s = 0;
    for (Eigen::Index t = 0; t < r; ++t) s += a[t] * b[(k + t) % r];
    out[k] = s;
  }
  return out;
}

Eigen::VectorXd circular_correlation_fft(const Eigen::VectorXd& a,
                                         const Eigen::VectorXd& b) {
  check_same_length(a, b);
  auto fa = fwd_fft(a);
  auto fb = fwd_fft(b);
  for (size_t i = 0; i < fa.size(); ++i) fa[i] = std::conj(fa[i]) * fb[i];
  return inv_fft_real(fa);
}

Eigen::VectorXd circular_correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.size() >= kFftThreshold ? circular_correlation_fft(a, b)
                                   : circular_correlation_naive(a, b);
}

Eigen::VectorXd circular_convolution_naive(const Eigen::VectorXd& a,
                                           const Eigen::VectorXd& b) {
  check_same_length(a, b);
  const Eigen::Index r = a.size();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(r);
  for (Eigen::Index k = 0; k < r; ++k) {
    double s = 0;
    for (Eigen::Index t = 0; t < r; ++t) s += a[t] * b[((k - t) % r + r) % r];
    out[k] = s;
  }
  return out;
}

Eigen::VectorXd circular_convolution_fft(const Eigen::VectorXd& a,
                                         const Eigen::VectorXd& b) {
  check_same_length(a, b);
  auto fa = fwd_fft(a);
  auto fb = fwd_fft(b);
  for (size_t i = 0; i < fa.size(); ++i) fa[i] *= fb[i];
  return inv_fft_real(fa);
}

Eigen::VectorXd circular_convolution(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.size() >= kFftThreshold ? circular_convolution_fft(a, b)
                                   : circular_convolution_naive(a, b);
}

// --- scoring ------------------------------------------------------------------

double score(const RescalParams& p, int i, int k, int j) {
  const auto r = static_cast<uint64_t>(p.dim());
  count_ops(r * r + r);
  return p.A.row(i) * p.R[static_cast<size_t>(k)] * p.A.row(j).transpose();
}

double score(const DistmultParams& p, int i, int k, int j) {
  count_ops(2 * static_cast<uint64_t>(p.dim()));
  // entity product first: the result is then bit-identical under i <-> j
  return (p.R.row(k).array() * (p.A.row(i).array() * p.A.row(j).array())).sum();
}

double score(const HolEParams& p, int i, int k, int j) {
  const auto r = static_cast<uint64_t>(p.dim());
  if (p.dim() >= kFftThreshold) {
    // three transforms plus the pointwise product and the final dot
    uint64_t lg = static_cast<uint64_t>(std::ceil(std::log2(static_cast<double>(r))));
    count_ops(3 * r * lg + 2 * r);
  } else {
    count_ops(r * r + r);
  }
  Eigen::VectorXd corr =
      circular_correlation(p.A.row(i).transpose(), p.A.row(j).transpose());
  return p.R.row(k) * corr;
}

double score(const ComplexParams& p, int i, int k, int j) {
  count_ops(6 * static_cast<uint64_t>(p.dim()));
  auto x = p.A_re.row(i).array(), y = p.A_im.row(i).array();
  auto pk = p.R_re.row(k).array(), qk = p.R_im.row(k).array();
  auto u = p.A_re.row(j).array(), v = p.A_im.row(j).array();
  return (pk * (x * u - y * v) - qk * (y * u + x * v)).sum();
}

double score(const TransEParams& p, int i, int k, int j) {
  count_ops(static_cast<uint64_t>(p.dim()));
  // (a_i - a_j) first: self-pairs cancel exactly, so s(i,i) is the same
  // float -|r_k|^2 for every i
  return -((p.A.row(i) - p.A.row(j)) + p.R.row(k)).squaredNorm();
}

double score(const ModelParams& m, int i, int k, int j) {
  return std::visit([&](const auto& p) { return score(p, i, k, j); }, m);
}

Eigen::MatrixXd score_matrix(const ModelParams& m, int k) {
  const int n = num_entities(m);
  Eigen::MatrixXd S(n, n);
  for (int j = 0; j < n; ++j) S.col(j) = score_subjects(m, k, j);
  return S;
}

namespace {

// -(|w|^2 - 2 A w + rownorms) for TransE-style distances to a fixed vector w.
Eigen::VectorXd neg_sq_distances(const Eigen::MatrixXd& A, const Eigen::VectorXd& w) {
  return 2.0 * (A * w).array() - w.squaredNorm() - A.rowwise().squaredNorm().array();
}

}  // namespace

Eigen::VectorXd score_subjects(const ModelParams& m, int k, int j) {
  struct Visitor {
    int k, j;
    Eigen::VectorXd operator()(const RescalParams& p) const {
      return p.A * (p.R[static_cast<size_t>(k)] * p.A.row(j).transpose());
    }
    Eigen::VectorXd operator()(const DistmultParams& p) const {
      return p.A * (p.R.row(k).array() * p.A.row(j).array()).matrix().transpose();
    }
    Eigen::VectorXd operator()(const HolEParams& p) const {
      return p.A * circular_correlation(p.R.row(k).transpose(), p.A.row(j).transpose());
    }
    Eigen::VectorXd operator()(const ComplexParams& p) const {
      auto pk = p.R_re.row(k).array(), qk = p.R_im.row(k).array();
      auto u = p.A_re.row(j).array(), v = p.A_im.row(j).array();
      Eigen::VectorXd c1 = (pk * u - qk * v).matrix().transpose();
      Eigen::VectorXd c2 = (-(qk * u + pk * v)).matrix().transpose();
      return p.A_re * c1 + p.A_im * c2;
    }
    Eigen::VectorXd operator()(const TransEParams& p) const {
      Eigen::VectorXd w = (p.A.row(j) - p.R.row(k)).transpose();
      return neg_sq_distances(p.A, w);
    }
  };
  return std::visit(Visitor{k, j}, m);
}

Eigen::VectorXd score_objects(const ModelParams& m, int i, int k) {
  struct Visitor {
    int i, k;
    Eigen::VectorXd operator()(const RescalParams& p) const {
      return p.A * (p.R[static_cast<size_t>(k)].transpose() * p.A.row(i).transpose());
    }
    Eigen::VectorXd operator()(const DistmultParams& p) const {
      return p.A * (p.R.row(k).array() * p.A.row(i).array()).matrix().transpose();
    }
    Eigen::VectorXd operator()(const HolEParams& p) const {
      return p.A * circular_convolution(p.A.row(i).transpose(), p.R.row(k).transpose());
    }
    Eigen::VectorXd operator()(const ComplexParams& p) const {
      auto x = p.A_re.row(i).array(), y = p.A_im.row(i).array();
      auto pk = p.R_re.row(k).array(), qk = p.R_im.row(k).array();
      Eigen::VectorXd d1 = (pk * x - qk * y).matrix().transpose();
      Eigen::VectorXd d2 = (-(qk * x + pk * y)).matrix().transpose();
      return p.A_re * d1 + p.A_im * d2;
    }
    Eigen::VectorXd operator()(const TransEParams& p) const {
      Eigen::VectorXd w = (p.A.row(i) + p.R.row(k)).transpose();
      return neg_sq_distances(p.A, w);
    }
  };
  return std::visit(Visitor{i, k}, m);
}

// --- gradients ------------------------------------------------------------------

RescalGrad grad(const RescalParams& p, int i, int k, int j) {
  RescalGrad g;
  const Eigen::MatrixXd& Rk = p.R[static_cast<size_t>(k)];
  g.subject = Rk * p.A.row(j).transpose();
  g.object = Rk.transpose() * p.A.row(i).transpose();
  g.relation = p.A.row(i).transpose() * p.A.row(j);
  return g;
}

VectorModelGrad grad(const DistmultParams& p, int i, int k, int j) {
  VectorModelGrad g;
  g.subject = (p.R.row(k).array() * p.A.row(j).array()).matrix().transpose();
  g.object = (p.R.row(k).array() * p.A.row(i).array()).matrix().transpose();
  g.relation = (p.A.row(i).array() * p.A.row(j).array()).matrix().transpose();
  return g;
}

VectorModelGrad grad(const HolEParams& p, int i, int k, int j) {
  VectorModelGrad g;
  Eigen::VectorXd ai = p.A.row(i).transpose(), aj = p.A.row(j).transpose(),
                  rk = p.R.row(k).transpose();
  g.subject = circular_correlation(rk, aj);
  g.object = circular_convolution(ai, rk);
  g.relation = circular_correlation(ai, aj);
  return g;
}

ComplexGrad grad(const ComplexParams& p, int i, int k, int j) {
  ComplexGrad g;
  auto x = p.A_re.row(i).array(), y = p.A_im.row(i).array();
  auto pk = p.R_re.row(k).array(), qk = p.R_im.row(k).array();
  auto u = p.A_re.row(j).array(), v = p.A_im.row(j).array();
  g.subject_re = (pk * u - qk * v).matrix().transpose();
  g.subject_im = (-(qk * u + pk * v)).matrix().transpose();
  g.object_re = (pk * x - qk * y).matrix().transpose();
  g.object_im = (-(qk * x + pk * y)).matrix().transpose();
  g.relation_re = (x * u - y * v).matrix().transpose();
  g.relation_im = (-(y * u + x * v)).matrix().transpose();
  return g;
}

VectorModelGrad grad(const TransEParams& p, int i, int k, int j) {
  VectorModelGrad g;
  Eigen::VectorXd d = (p.A.row(i) + p.R.row(k) - p.A.row(j)).transpose();
  g.subject = -2.0 * d;
  g.object = 2.0 * d;
  g.relation = -2.0 * d;
  return g;
}

// --- initialization ----------------------------------------------------------------

namespace {

void fill_uniform(Eigen::MatrixXd& m, double bound, Rng& rng) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.uniform(-bound, bound);
}

}  // namespace

ModelParams init_params(ModelKind kind, int n_entities, int n_relations, int r,
                        uint64_t seed) {
  if (r < 1) throw std::invalid_argument("init_params: dimension must be >= 1");
  if (n_entities < 2 || n_relations < 1) {
    throw std::invalid_argument("init_params: need N >= 2 and K >= 1");
  }
  Rng rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(r));
  auto uniform_mat = [&](int rows, int cols) {
    Eigen::MatrixXd m(rows, cols);
    fill_uniform(m, bound, rng);
    return m;
  };

  switch (kind) {
    case ModelKind::Rescal: {
      RescalParams p;
      p.A = uniform_mat(n_entities, r);
      p.R.reserve(static_cast<size_t>(n_relations));
      for (int k = 0; k < n_relations; ++k) p.R.push_back(uniform_mat(r, r));
      return p;
    }
    case ModelKind::Distmult: {
      DistmultParams p;
      p.A = uniform_mat(n_entities, r);
      p.R = uniform_mat(n_relations, r);
      return p;
    }
    case ModelKind::HolE: {
      HolEParams p;
      p.A = uniform_mat(n_entities, r);
      p.R = uniform_mat(n_relations, r);
      return p;
    }
    case ModelKind::Complex: {
      ComplexParams p;
      p.A_re = uniform_mat(n_entities, r);
      p.A_im = uniform_mat(n_entities, r);
      p.R_re = uniform_mat(n_relations, r);
      p.R_im = uniform_mat(n_relations, r);
      return p;
    }
    case ModelKind::TransE: {
      TransEParams p;
      p.A = uniform_mat(n_entities, r);
      p.R = uniform_mat(n_relations, r);
      return p;
    }
  }
  throw std::invalid_argument("init_params: bad model kind");
}

// --- serialization -------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'K', 'G', 'B', 'M'};
constexpr uint32_t kFormatVersion = 1;

void write_u32(std::ostream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

uint32_t read_u32(std::istream& in) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

// Row-major f64 payloads regardless of Eigen's storage order.
void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  std::vector<double> row(static_cast<size_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) row[static_cast<size_t>(j)] = m(i, j);
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(double)));
  }
}

Eigen::MatrixXd read_matrix(std::istream& in, int rows, int cols) {
  Eigen::MatrixXd m(rows, cols);
  std::vector<double> row(static_cast<size_t>(cols));
  for (int i = 0; i < rows; ++i) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(double)));
    for (int j = 0; j < cols; ++j) m(i, j) = row[static_cast<size_t>(j)];
  }
  return m;
}

}  // namespace

std::string sidecar_path(const std::string& model_path) { return model_path + ".meta"; }

void save_model(const std::string& path, const ModelParams& m, const KvList& sidecar) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write model file: " + path);

  out.write(kMagic, 4);
  write_u32(out, kFormatVersion);
  const uint8_t kind = static_cast<uint8_t>(kind_of(m));
  out.write(reinterpret_cast<const char*>(&kind), 1);
  write_u32(out, static_cast<uint32_t>(num_entities(m)));
  write_u32(out, static_cast<uint32_t>(num_relations(m)));
  write_u32(out, static_cast<uint32_t>(dim(m)));

  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, RescalParams>) {
          write_matrix(out, p.A);
          for (const auto& rk : p.R) write_matrix(out, rk);
        } else if constexpr (std::is_same_v<T, ComplexParams>) {
          write_matrix(out, p.A_re);
          write_matrix(out, p.A_im);
          write_matrix(out, p.R_re);
          write_matrix(out, p.R_im);
        } else {
          write_matrix(out, p.A);
          write_matrix(out, p.R);
        }
      },
      m);
  if (!out) throw IoError("write failed: " + path);
  out.close();

  KvList meta = sidecar;
  meta.emplace_back("model", to_string(kind_of(m)));
  meta.emplace_back("entities", std::to_string(num_entities(m)));
  meta.emplace_back("relations", std::to_string(num_relations(m)));
  meta.emplace_back("dim", std::to_string(dim(m)));
  write_kv_file_atomic(sidecar_path(path), meta);
}

ModelParams load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file: " + path);

  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw IoError("not a KGBM model file: " + path);
  }
  uint32_t version = read_u32(in);
  if (version != kFormatVersion) {
    throw IoError("unsupported model format version " + std::to_string(version));
  }
  uint8_t kind_byte = 0;
  in.read(reinterpret_cast<char*>(&kind_byte), 1);
  if (kind_byte > 4) throw IoError("bad model kind byte in " + path);
  const ModelKind kind = static_cast<ModelKind>(kind_byte);
  const int n = static_cast<int>(read_u32(in));
  const int k = static_cast<int>(read_u32(in));
  const int r = static_cast<int>(read_u32(in));
  if (!in || n < 2 || k < 1 || r < 1) throw IoError("bad model header in " + path);

  ModelParams m;
  switch (kind) {
    case ModelKind::Rescal: {
      RescalParams p;
      p.A = read_matrix(in, n, r);
      p.R.reserve(static_cast<size_t>(k));
      for (int s = 0; s < k; ++s) p.R.push_back(read_matrix(in, r, r));
      m = std::move(p);
      break;
    }
    case ModelKind::Complex: {
      ComplexParams p;
      p.A_re = read_matrix(in, n, r);
      p.A_im = read_matrix(in, n, r);
      p.R_re = read_matrix(in, k, r);
      p.R_im = read_matrix(in, k, r);
      m = std::move(p);
      break;
    }
    case ModelKind::Distmult: {
      DistmultParams p;
      p.A = read_matrix(in, n, r);
      p.R = read_matrix(in, k, r);
      m = std::move(p);
      break;
    }
    case ModelKind::HolE: {
      HolEParams p;
      p.A = read_matrix(in, n, r);
      p.R = read_matrix(in, k, r);
      m = std::move(p);
      break;
    }
    case ModelKind::TransE: {
      TransEParams p;
      p.A = read_matrix(in, n, r);
      p.R = read_matrix(in, k, r);
      m = std::move(p);
      break;
    }
  }
  if (!in) throw IoError("truncated model file: " + path);
  return m;
}

KvMap load_model_sidecar(const std::string& model_path) {
  return read_kv_file(sidecar_path(model_path));
}

}  // namespace kgbm
