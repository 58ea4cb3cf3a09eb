#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <functional>
#include <numeric>

#include "kgbm/ensemble.hpp"
#include "kgbm/training.hpp"
#include "support/test_util.hpp"

using namespace kgbm;

namespace {

class FnScorer final : public Scorer {
 public:
  FnScorer(int n, int k, std::function<double(int, int, int)> fn)
      : n_(n), k_(k), fn_(std::move(fn)) {}
  double score(int i, int k, int j) const override { return fn_(i, k, j); }
  int num_entities() const override { return n_; }
  int num_relations() const override { return k_; }

 private:
  int n_, k_;
  std::function<double(int, int, int)> fn_;
};

std::vector<int> ranking_order(const Eigen::VectorXd& scores) {
  std::vector<int> order(static_cast<size_t>(scores.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[a] > scores[b]; });
  return order;
}

}  // namespace

TEST_CASE("meta datasets are balanced with features in the unit interval") {
  KnowledgeBase kb = test::make_synthetic_kb({30, 3, 140, 15, 15, 41});
  TripleIndex train_index(kb, TripleIndex::Scope::TrainOnly);

  ModelParams m1 = init_params(ModelKind::Distmult, 30, 3, 4, 1);
  ModelParams m2 = init_params(ModelKind::TransE, 30, 3, 4, 2);
  ModelScorer s1(m1), s2(m2);
  std::vector<const Scorer*> base{&s1, &s2};

  long expected_pos = 0;
  for (const Triple& t : kb.train()) expected_pos += t.relation == 0 ? 1 : 0;

  MetaDataset ds = build_meta_dataset(kb, base, train_index, 0, 99);
  CHECK(ds.examples.size() == static_cast<size_t>(2 * expected_pos));
  long pos = 0, neg = 0;
  for (const MetaExample& e : ds.examples) (e.label ? pos : neg) += 1;
  CHECK(pos == neg);
  for (const MetaExample& e : ds.examples) {
    CHECK(e.features.minCoeff() >= 0.0);
    CHECK(e.features.maxCoeff() <= 1.0);
  }

  MetaDataset again = build_meta_dataset(kb, base, train_index, 0, 99);
  REQUIRE(again.examples.size() == ds.examples.size());
  for (size_t i = 0; i < ds.examples.size(); ++i) {
    CHECK(again.examples[i].triple == ds.examples[i].triple);
    CHECK(again.examples[i].features == ds.examples[i].features);
  }
}

TEST_CASE("a constant base score becomes the all-zero feature") {
  KnowledgeBase kb = test::make_synthetic_kb({20, 2, 50, 10, 10, 42});
  TripleIndex train_index(kb, TripleIndex::Scope::TrainOnly);
  FnScorer flat(20, 3, [](int, int, int) { return 3.25; });
  FnScorer varied(20, 3, [](int i, int k, int j) { return 0.1 * i - 0.2 * j + k; });
  std::vector<const Scorer*> base{&flat, &varied};
  MetaDataset ds = build_meta_dataset(kb, base, train_index, 1, 5);
  REQUIRE_FALSE(ds.examples.empty());
  for (const MetaExample& e : ds.examples) CHECK(e.features[0] == 0.0);
  CHECK(ds.feat_min[0] == ds.feat_max[0]);
}

TEST_CASE("logistic fit: start point, separable sign, monotone objective") {
  std::vector<MetaExample> data;
  Rng rng(43);
  for (int i = 0; i < 30; ++i) {
    MetaExample e;
    e.label = i % 2;
    e.features.resize(1);
    e.features[0] = e.label == 1 ? rng.uniform(0.8, 1.0) : rng.uniform(0.0, 0.2);
    data.push_back(e);
  }

  LogRegFit fit = fit_logreg(data, 0.01);
  // the zero start predicts 0.5, i.e. objective n*log(2)
  CHECK(fit.objective_trace.front() ==
        doctest::Approx(static_cast<double>(data.size()) * std::log(2.0)));
  CHECK(fit.w[0] > 0);  // separating direction
  for (size_t i = 1; i < fit.objective_trace.size(); ++i) {
    CHECK(fit.objective_trace[i] < fit.objective_trace[i - 1]);
  }
  CHECK(fit.final_grad_norm <= 1e-6);

  std::vector<MetaExample> one_class(data.begin(), data.begin() + 2);
  one_class[0].label = one_class[1].label = 1;
  CHECK_THROWS_AS(fit_logreg(one_class, 0.1), std::invalid_argument);
}

TEST_CASE("ensemble score equals the clamped rescaled dot product") {
  FnScorer s1(5, 2, [](int i, int k, int j) { return 1.0 * i - j + k; });
  FnScorer s2(5, 2, [](int i, int k, int j) { return -2.0 * i + 0.5 * j + k; });
  std::vector<const Scorer*> base{&s1, &s2};

  RelationEnsemble ens;
  ens.model_ids = {"m1", "m2"};
  ens.fallback_model = 1;
  RelationModel rm;
  rm.feat_min.resize(2);
  rm.feat_max.resize(2);
  rm.weights.resize(2);
  rm.feat_min << -1, -2;
  rm.feat_max << 2, 1;
  rm.weights << 0.7, -0.4;
  rm.bias = 0.25;
  ens.relations[0] = rm;

  Rng rng(44);
  for (int t = 0; t < 100; ++t) {
    int i = rng.uniform_int(5), j = rng.uniform_int(5);
    double expect = rm.bias;
    double f1 = std::clamp((s1.score(i, 0, j) - -1.0) / 3.0, 0.0, 1.0);
    double f2 = std::clamp((s2.score(i, 0, j) - -2.0) / 3.0, 0.0, 1.0);
    expect += 0.7 * f1 - 0.4 * f2;
    CHECK(ensemble_score(ens, base, i, 0, j) == doctest::Approx(expect).epsilon(1e-12));
  }

  // relation 1 has no entry: the fallback model's raw score is used
  CHECK(ensemble_score(ens, base, 3, 1, 2) == s2.score(3, 1, 2));

  // batch path agrees with pointwise scoring
  EnsembleScorer es(ens, base);
  for (int k = 0; k < 2; ++k) {
    Eigen::VectorXd subj = es.score_subjects(k, 2);
    Eigen::VectorXd obj = es.score_objects(3, k);
    for (int e = 0; e < 5; ++e) {
      CHECK(subj[e] == doctest::Approx(es.score(e, k, 2)).epsilon(1e-12));
      CHECK(obj[e] == doctest::Approx(es.score(3, k, e)).epsilon(1e-12));
    }
  }
}

TEST_CASE("unit weight on one model preserves its ranking within bounds") {
  FnScorer s1(6, 1, [](int i, int, int j) { return std::sin(3.7 * i + 1.3 * j); });
  FnScorer s2(6, 1, [](int i, int, int j) { return std::cos(2.1 * i - 0.7 * j); });
  std::vector<const Scorer*> base{&s1, &s2};

  RelationEnsemble ens;
  ens.model_ids = {"m1", "m2"};
  RelationModel rm;
  rm.feat_min.resize(2);
  rm.feat_max.resize(2);
  rm.weights.resize(2);
  rm.feat_min << -1, -1;  // covers the full sine range: rescaling is strictly increasing
  rm.feat_max << 1, 1;
  rm.weights << 1, 0;
  rm.bias = 0;
  ens.relations[0] = rm;

  EnsembleScorer es(ens, base);
  for (int j = 0; j < 6; ++j) {
    CHECK(ranking_order(es.score_subjects(0, j)) == ranking_order(s1.score_subjects(0, j)));
  }

  // zero weights give a constant score
  ens.relations[0].weights << 0, 0;
  Eigen::VectorXd flat = es.score_subjects(0, 1);
  CHECK(flat.maxCoeff() == flat.minCoeff());
}

TEST_CASE("train_ensemble covers relations and beats or matches the singles") {
  KnowledgeBase kb = test::make_synthetic_kb({60, 10, 560, 60, 60, 45});

  TrainConfig cfg;
  cfg.dim = 12;
  cfg.epochs = 60;
  cfg.learning_rate = 0.1;
  cfg.seed = 7;

  cfg.model = ModelKind::HolE;
  cfg.margin = 0.2;
  TrainResult hole = train(kb, cfg);
  cfg.model = ModelKind::TransE;
  cfg.margin = 0.5;
  TrainResult transe = train(kb, cfg);

  ModelScorer s1(hole.params), s2(transe.params);
  std::vector<const Scorer*> base{&s1, &s2};
  RelationEnsemble ens = train_ensemble(kb, base, {"hole", "transe"}, 123);
  CHECK(ens.relations.size() == 3);

  EnsembleScorer es(ens, base);
  double h1 = evaluate_ranking(s1, kb, kb.test()).hits_at_k.at(10);
  double h2 = evaluate_ranking(s2, kb, kb.test()).hits_at_k.at(10);
  double he = evaluate_ranking(es, kb, kb.test()).hits_at_k.at(10);
  CHECK(he >= std::max(h1, h2) - 0.02);

  CHECK_THROWS_AS(train_ensemble(kb, {&s1}, {"hole"}, 1), std::invalid_argument);
}

TEST_CASE("parallel relation fits assemble the same ensemble") {
  KnowledgeBase kb = test::make_synthetic_kb({30, 3, 120, 15, 15, 46});
  ModelParams m1 = init_params(ModelKind::Distmult, 30, 3, 4, 1);
  ModelParams m2 = init_params(ModelKind::TransE, 30, 3, 4, 2);
  ModelScorer s1(m1), s2(m2);
  std::vector<const Scorer*> base{&s1, &s2};

  RelationEnsemble serial = train_ensemble(kb, base, {"a", "b"}, 9, 1.0, 1);
  RelationEnsemble parallel = train_ensemble(kb, base, {"a", "b"}, 9, 1.0, 4);
  CHECK(serial.fallback_model == parallel.fallback_model);
  REQUIRE(serial.relations.size() == parallel.relations.size());
  for (const auto& [k, rm] : serial.relations) {
    REQUIRE(parallel.relations.count(k) == 1);
    const RelationModel& pm = parallel.relations.at(k);
    CHECK(rm.weights == pm.weights);
    CHECK(rm.bias == pm.bias);
    CHECK(rm.feat_min == pm.feat_min);
    CHECK(rm.feat_max == pm.feat_max);
  }
}

TEST_CASE("single relation KB yields a one-entry table") {
  KnowledgeBase kb = KnowledgeBase::make(
      {"a", "b", "c", "d"}, {"k"},
      {{0, 0, 1}, {1, 0, 2}, {2, 0, 3}, {3, 0, 0}, {0, 0, 2}}, {{1, 0, 3}}, {{2, 0, 0}});
  ModelParams m1 = init_params(ModelKind::Distmult, 4, 1, 2, 1);
  ModelParams m2 = init_params(ModelKind::TransE, 4, 1, 2, 2);
  ModelScorer s1(m1), s2(m2);
  RelationEnsemble ens = train_ensemble(kb, {&s1, &s2}, {"a", "b"}, 5);
  CHECK(ens.relations.size() == 1);
  CHECK(ens.relations.count(0) == 1);
}

TEST_CASE("ensemble files round-trip exactly") {
  RelationEnsemble ens;
  ens.model_ids = {"wn18-rescal.kgbm", "wn18-hole.kgbm"};
  ens.fallback_model = 1;
  RelationModel rm;
  rm.feat_min.resize(2);
  rm.feat_max.resize(2);
  rm.weights.resize(2);
  rm.feat_min << -1.25, 0.0078125;
  rm.feat_max << 3.5, 1.0 / 3.0;
  rm.weights << 0.123456789012345, -7.75;
  rm.bias = 0.25;
  ens.relations[4] = rm;

  test::TempDir tmp("ens_io");
  ens.save(tmp.path("e.kgbe"));
  RelationEnsemble back = RelationEnsemble::load(tmp.path("e.kgbe"));
  CHECK(back.model_ids == ens.model_ids);
  CHECK(back.fallback_model == 1);
  REQUIRE(back.relations.count(4) == 1);
  CHECK(back.relations[4].feat_min == rm.feat_min);
  CHECK(back.relations[4].feat_max == rm.feat_max);
  CHECK(back.relations[4].weights == rm.weights);
  CHECK(back.relations[4].bias == rm.bias);
}
