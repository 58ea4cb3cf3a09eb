#pragma once

#include <vector>

#include "kgbm/kb.hpp"
#include "kgbm/models.hpp"

namespace kgbm {

inline constexpr int kGridSearchEpochs = 50;
inline constexpr int kFinalTrainEpochs = 2000;
inline constexpr double kAdagradEpsilon = 1e-8;

struct TrainConfig {
  ModelKind model = ModelKind::TransE;
  int dim = 100;
  double margin = 1.0;          // gamma >= 0
  double learning_rate = 0.1;   // eta > 0
  double lambda_entity = 0.0;   // L2 weight on touched entity rows
  double lambda_relation = 0.0; // L2 weight on touched relation params
  int epochs = kGridSearchEpochs;
  uint64_t seed = 0;
  int negatives_per_positive = 1;

  void validate() const;  // throws std::invalid_argument

  KvList to_kv() const;
  static TrainConfig from_kv(const KvMap& kv);  // known keys only; others ignored
};

// Per-coordinate squared-gradient accumulators, in the same layout as the
// model parameters (entity block first, then relation blocks).
struct AdagradState {
  std::vector<Eigen::MatrixXd> acc;
  double epsilon = kAdagradEpsilon;

  static AdagradState like(const ModelParams& m);
};

// acc += g^2; theta -= eta * g / (sqrt(acc) + eps), elementwise.
void adagrad_update(Eigen::MatrixXd& theta, Eigen::MatrixXd& acc,
                    const Eigen::MatrixXd& g, double eta, double epsilon);

// Same update restricted to one row (the sparse case).
void adagrad_update_row(Eigen::MatrixXd& theta, Eigen::MatrixXd& acc, int row,
                        const Eigen::VectorXd& g, double eta, double epsilon);

// Perturbs subject or object (p = 1/2 each) with a uniform entity until the
// candidate is absent from the training set; gives up after 100 rejections.
// `train_index` must be a TrainOnly index.
Triple sample_negative(const TripleIndex& train_index, int num_entities,
                       const Triple& positive, Rng& rng);

inline double margin_loss(double f_pos, double f_neg, double gamma) {
  double v = f_neg + gamma - f_pos;
  return v > 0 ? v : 0;
}

double sigmoid(double x);

// Training objective's per-triple value: the raw score for all models except
// HolE, which trains on the logistic of its score.
double model_f(const ModelParams& m, int i, int k, int j);

struct TrainResult {
  ModelParams params;
  std::vector<double> epoch_mean_loss;
};

// Margin-based training: every epoch visits each training triple exactly once
// in a seeded shuffled order, draws one negative per positive, and applies a
// hinge + lazy-L2 Adagrad step to the touched rows. Deterministic given the
// config seed.
TrainResult train(const KnowledgeBase& kb, const TrainConfig& config);

// Same loop starting from the given parameters (fresh Adagrad state).
TrainResult train_from(const KnowledgeBase& kb, const TrainConfig& config,
                       ModelParams initial);

enum class SelectionMetric { Hits10, Mrr };

struct GridSearchResult {
  TrainConfig best;
  std::vector<double> scores;  // one per grid entry, in grid order
};

// Trains every config for budget_epochs and evaluates the metric on the
// validation split (filtered). Ties break in favor of the earlier grid entry.
GridSearchResult grid_search(const KnowledgeBase& kb,
                             const std::vector<TrainConfig>& grid, int budget_epochs,
                             SelectionMetric metric = SelectionMetric::Hits10,
                             int threads = 1);

}  // namespace kgbm
