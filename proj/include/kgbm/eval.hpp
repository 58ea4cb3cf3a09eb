#pragma once

#include <map>
#include <string>
#include <vector>

#include "kgbm/kb.hpp"
#include "kgbm/models.hpp"

namespace kgbm {

// Anything that can score triples; base models and ensembles both qualify.
// The batch methods default to looping over score() and exist so vectorized
// implementations can plug in.
class Scorer {
 public:
  virtual ~Scorer() = default;

  virtual double score(int i, int k, int j) const = 0;
  virtual Eigen::VectorXd score_subjects(int k, int j) const;
  virtual Eigen::VectorXd score_objects(int i, int k) const;
  virtual int num_entities() const = 0;
  virtual int num_relations() const = 0;
};

class ModelScorer final : public Scorer {
 public:
  explicit ModelScorer(const ModelParams& m) : m_(m) {}

  double score(int i, int k, int j) const override { return kgbm::score(m_, i, k, j); }
  Eigen::VectorXd score_subjects(int k, int j) const override {
    return kgbm::score_subjects(m_, k, j);
  }
  Eigen::VectorXd score_objects(int i, int k) const override {
    return kgbm::score_objects(m_, i, k);
  }
  int num_entities() const override { return kgbm::num_entities(m_); }
  int num_relations() const override { return kgbm::num_relations(m_); }

 private:
  const ModelParams& m_;
};

enum class QuerySide { Subject, Object };

struct RankResult {
  Triple query;
  QuerySide side = QuerySide::Object;
  int filtered_rank = 1;  // always <= raw_rank
  int raw_rank = 1;
};

struct MetricsSummary {
  double mrr = 0;  // in [0,1]
  std::map<int, double> hits_at_k;
  double mr = 0;
  long num_queries = 0;

  struct CategoryCell {
    long queries = 0;
    long hits10 = 0;
    double fraction() const {
      return queries > 0 ? static_cast<double>(hits10) / static_cast<double>(queries) : 0.0;
    }
  };
  // (category, side) -> HITS@10 aggregate
  std::map<std::pair<RelationCategory, QuerySide>, CategoryCell> per_category;

  std::string to_table() const;  // aligned text, percentages with one decimal
  KvList to_kv() const;          // mrr=, hits10=, mr=, cat.<side>.<cat>.hits10=
};

// Ranks the true entity against all N replacements of `side`.
// raw: 1 + #(strictly higher scores). filtered: candidates other than the
// true entity whose triple is a known fact (train+valid+test) are discarded
// first. `known` must be an AllSplits index over the same KB.
RankResult rank_query(const Scorer& scorer, const KnowledgeBase& kb,
                      const TripleIndex& known, const Triple& t, QuerySide side);

// Both-side filtered ranking over a split (2 queries per triple). Queries are
// independent; with threads > 1 they are scored in parallel and reduced in a
// fixed order, so results do not depend on the schedule.
MetricsSummary evaluate_ranking(const Scorer& scorer, const KnowledgeBase& kb,
                                const std::vector<Triple>& split, int threads = 1);

// --- triple classification ----------------------------------------------------

struct LabeledTriple {
  Triple triple;
  int label = 0;  // 1 = positive
};

// One perturbed negative per positive (subject/object with p=1/2, uniform
// entity, rejected against all known facts), seeded and therefore fixed
// across models.
std::vector<LabeledTriple> build_classification_set(const KnowledgeBase& kb,
                                                    const std::vector<Triple>& positives,
                                                    const TripleIndex& known,
                                                    uint64_t seed);

void write_classification_tsv(const KnowledgeBase& kb, const std::string& path,
                              const std::vector<LabeledTriple>& set);
std::vector<LabeledTriple> read_classification_tsv(const KnowledgeBase& kb,
                                                   const std::string& path);

struct ThresholdTable {
  std::map<int, double> sigma;  // per relation
  double global_sigma = 0;      // pooled fallback for uncovered relations

  double threshold_for(int relation) const {
    auto it = sigma.find(relation);
    return it == sigma.end() ? global_sigma : it->second;
  }
};

// Best accuracy threshold for `score > sigma` classification over candidate
// thresholds (midpoints of adjacent distinct scores plus +-infinity); ties
// resolve to the smallest candidate. Exposed for the optimality tests.
double best_threshold(std::vector<double> pos_scores, std::vector<double> neg_scores,
                      double* best_accuracy = nullptr);

// Per-relation optimal thresholds on validation data; relations with no
// validation examples fall back to the pooled global threshold.
ThresholdTable select_thresholds(const Scorer& scorer,
                                 const std::vector<LabeledTriple>& validation);

// Fraction of correct decisions under `score > sigma_k`.
double classify_triples(const Scorer& scorer, const ThresholdTable& thresholds,
                        const std::vector<LabeledTriple>& test);

}  // namespace kgbm
