#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "kgbm/kb.hpp"
#include "kgbm/util.hpp"

namespace kgbm::test {

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng,
                                     double lo = -1.0, double hi = 1.0) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(lo, hi);
  return m;
}

// Unique scratch directory under the system temp dir.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    dir_ = std::filesystem::temp_directory_path() /
           ("kgbm_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir_);
    std::filesystem::create_directories(dir_);
  }
  ~TempDir() { std::filesystem::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  std::string str() const { return dir_.string(); }

 private:
  std::filesystem::path dir_;
};

inline void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::trunc);
  for (const std::string& l : lines) out << l << "\n";
}

// Cluster-structured KB with three relations: `similar` links entities within
// a cluster (symmetric), `next` links a cluster to its successor cluster
// (antisymmetric), `type` maps every entity to its cluster anchor
// (many-to-one). Triples are shuffled with the seed and split.
struct SyntheticSpec {
  int entities = 200;
  int cluster_size = 10;
  int train = 3000;
  int valid = 300;
  int test = 300;
  uint64_t seed = 7;
};

inline KnowledgeBase make_synthetic_kb(const SyntheticSpec& spec = {}) {
  const int n = spec.entities, c = spec.cluster_size;
  auto cluster_of = [&](int e) { return e / c; };

  std::vector<Triple> all;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j && cluster_of(i) == cluster_of(j)) all.push_back({i, 0, j});
      if (cluster_of(j) == cluster_of(i) + 1) all.push_back({i, 1, j});
    }
    all.push_back({i, 2, cluster_of(i) * c});
  }

  Rng rng(spec.seed);
  shuffle(all, rng);
  const size_t want = static_cast<size_t>(spec.train + spec.valid + spec.test);
  if (all.size() < want) throw std::invalid_argument("synthetic spec too large");

  std::vector<Triple> train(all.begin(), all.begin() + spec.train);
  std::vector<Triple> valid(all.begin() + spec.train, all.begin() + spec.train + spec.valid);
  std::vector<Triple> test(all.begin() + spec.train + spec.valid,
                           all.begin() + static_cast<long>(want));

  std::vector<std::string> entities;
  for (int i = 0; i < n; ++i) entities.push_back("e" + std::to_string(i));
  std::vector<std::string> relations{"similar", "next", "type"};
  return KnowledgeBase::make(std::move(entities), std::move(relations), std::move(train),
                             std::move(valid), std::move(test));
}

}  // namespace kgbm::test
