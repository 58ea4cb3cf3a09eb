#pragma once

#include <map>
#include <string>
#include <vector>

#include "kgbm/eval.hpp"
#include "kgbm/kb.hpp"

namespace kgbm {

struct MetaExample {
  Triple triple;
  int label = 0;                // 1 = positive
  Eigen::VectorXd features;     // rescaled base scores, clamped to [0,1]
};

struct MetaDataset {
  std::vector<MetaExample> examples;  // class-balanced by construction
  Eigen::VectorXd feat_min, feat_max; // per base model, over this dataset
};

// Per-relation stacking entry: linear feature rescaling plus logistic weights.
struct RelationModel {
  Eigen::VectorXd feat_min, feat_max;
  Eigen::VectorXd weights;  // one per base model
  double bias = 0;
};

struct RelationEnsemble {
  std::vector<std::string> model_ids;     // feature order
  int fallback_model = 0;                 // used for relations without an entry
  std::map<int, RelationModel> relations;

  void save(const std::string& path) const;  // versioned text format
  static RelationEnsemble load(const std::string& path);
};

// Positives of relation k plus one perturbed negative each (training
// strategy: perturb subject/object with p=1/2, reject candidates present in
// train). Features are raw base-model scores linearly rescaled into [0,1]
// over this dataset; a constant feature (min = max) maps to 0. Returns an
// empty dataset if the relation has positives but no sampleable negative.
MetaDataset build_meta_dataset(const KnowledgeBase& kb,
                               const std::vector<const Scorer*>& base_models,
                               const TripleIndex& train_index, int relation,
                               uint64_t seed);

struct LogRegFit {
  Eigen::VectorXd w;
  double b = 0;
  std::vector<double> objective_trace;  // decreases monotonically
  double final_grad_norm = 0;
};

// L2-regularized logistic regression by full-batch gradient descent with
// backtracking line search, run until the gradient infinity-norm drops to
// 1e-6 or 10^4 iterations. Throws if only one class is present.
LogRegFit fit_logreg(const std::vector<MetaExample>& examples, double reg);

// w . phi + b with phi the clamped rescaled base scores for (i,k,j).
// Relations without an ensemble entry fall back to the designated base
// model's raw score.
double ensemble_score(const RelationEnsemble& ens,
                      const std::vector<const Scorer*>& base_models, int i, int k, int j);

class EnsembleScorer final : public Scorer {
 public:
  EnsembleScorer(const RelationEnsemble& ens, std::vector<const Scorer*> base_models)
      : ens_(ens), base_(std::move(base_models)) {}

  double score(int i, int k, int j) const override {
    return ensemble_score(ens_, base_, i, k, j);
  }
  Eigen::VectorXd score_subjects(int k, int j) const override;
  Eigen::VectorXd score_objects(int i, int k) const override;
  int num_entities() const override { return base_[0]->num_entities(); }
  int num_relations() const override { return base_[0]->num_relations(); }

 private:
  const RelationEnsemble& ens_;
  std::vector<const Scorer*> base_;
};

// Fits one logistic model per relation with >=1 training triple; relations
// whose meta dataset is empty are skipped (fallback applies). The fallback
// model is the base model with the highest filtered validation HITS@10.
// Per-relation fits run in parallel when threads > 1; the result does not
// depend on the schedule.
RelationEnsemble train_ensemble(const KnowledgeBase& kb,
                                const std::vector<const Scorer*>& base_models,
                                const std::vector<std::string>& model_ids, uint64_t seed,
                                double reg = 1.0, int threads = 1);

}  // namespace kgbm
