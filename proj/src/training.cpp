#include "kgbm/training.hpp"

#include <array>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "kgbm/eval.hpp"

namespace kgbm {

void TrainConfig::validate() const {
  if (dim < 1) throw std::invalid_argument("dim must be >= 1");
  if (margin < 0) throw std::invalid_argument("margin must be >= 0");
  if (learning_rate <= 0) throw std::invalid_argument("lr must be > 0");
  if (lambda_entity < 0 || lambda_relation < 0) {
    throw std::invalid_argument("lambda weights must be >= 0");
  }
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (negatives_per_positive < 1) throw std::invalid_argument("negatives must be >= 1");
}

KvList TrainConfig::to_kv() const {
  auto fmt = [](double v) {
    std::ostringstream os;
    os << v;
    return os.str();
  };
  return {
      {"model", to_string(model)},
      {"dim", std::to_string(dim)},
      {"margin", fmt(margin)},
      {"lr", fmt(learning_rate)},
      {"lambda_e", fmt(lambda_entity)},
      {"lambda_r", fmt(lambda_relation)},
      {"epochs", std::to_string(epochs)},
      {"seed", std::to_string(seed)},
      {"negatives", std::to_string(negatives_per_positive)},
  };
}

TrainConfig TrainConfig::from_kv(const KvMap& kv) {
  TrainConfig c;
  auto get = [&](const char* key) -> const std::string* {
    auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };
  try {
    if (auto* v = get("model")) c.model = model_kind_from_string(*v);
    if (auto* v = get("dim")) c.dim = std::stoi(*v);
    if (auto* v = get("margin")) c.margin = std::stod(*v);
    if (auto* v = get("lr")) c.learning_rate = std::stod(*v);
    if (auto* v = get("lambda_e")) c.lambda_entity = std::stod(*v);
    if (auto* v = get("lambda_r")) c.lambda_relation = std::stod(*v);
    if (auto* v = get("epochs")) c.epochs = std::stoi(*v);
    if (auto* v = get("seed")) c.seed = std::stoull(*v);
    if (auto* v = get("negatives")) c.negatives_per_positive = std::stoi(*v);
  } catch (const std::logic_error&) {
    throw std::invalid_argument("bad numeric value in training config");
  }
  return c;
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

double model_f(const ModelParams& m, int i, int k, int j) {
  double s = score(m, i, k, j);
  return kind_of(m) == ModelKind::HolE ? sigmoid(s) : s;
}

AdagradState AdagradState::like(const ModelParams& m) {
  AdagradState st;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, RescalParams>) {
          st.acc.push_back(Eigen::MatrixXd::Zero(p.A.rows(), p.A.cols()));
          for (const auto& rk : p.R)
            st.acc.push_back(Eigen::MatrixXd::Zero(rk.rows(), rk.cols()));
        } else if constexpr (std::is_same_v<T, ComplexParams>) {
          st.acc.push_back(Eigen::MatrixXd::Zero(p.A_re.rows(), p.A_re.cols()));
          st.acc.push_back(Eigen::MatrixXd::Zero(p.A_im.rows(), p.A_im.cols()));
          st.acc.push_back(Eigen::MatrixXd::Zero(p.R_re.rows(), p.R_re.cols()));
          st.acc.push_back(Eigen::MatrixXd::Zero(p.R_im.rows(), p.R_im.cols()));
        } else {
          st.acc.push_back(Eigen::MatrixXd::Zero(p.A.rows(), p.A.cols()));
          st.acc.push_back(Eigen::MatrixXd::Zero(p.R.rows(), p.R.cols()));
        }
      },
      m);
  return st;
}

void adagrad_update(Eigen::MatrixXd& theta, Eigen::MatrixXd& acc,
                    const Eigen::MatrixXd& g, double eta, double epsilon) {
  acc.array() += g.array().square();
  theta.array() -= eta * g.array() / (acc.array().sqrt() + epsilon);
}

void adagrad_update_row(Eigen::MatrixXd& theta, Eigen::MatrixXd& acc, int row,
                        const Eigen::VectorXd& g, double eta, double epsilon) {
  for (Eigen::Index t = 0; t < g.size(); ++t) {
    const double gv = g[t];
    acc(row, t) += gv * gv;
    theta(row, t) -= eta * gv / (std::sqrt(acc(row, t)) + epsilon);
  }
}

Triple sample_negative(const TripleIndex& train_index, int num_entities,
                       const Triple& positive, Rng& rng) {
  for (int attempt = 0; attempt < 100; ++attempt) {
    Triple cand = positive;
    if (rng.coin()) {
      cand.subject = rng.uniform_int(num_entities);
    } else {
      cand.object = rng.uniform_int(num_entities);
    }
    if (!train_index.contains(cand)) return cand;
  }
  throw std::runtime_error(
      "sample_negative: no negative found in 100 attempts; relation covers nearly all "
      "entity pairs");
}

namespace {

// One hinge + lazy-L2 Adagrad step. Gradients for the <=4 touched entity rows
// are accumulated first so coinciding rows (self-loops, shared entities
// between positive and negative) receive a single combined update.
template <class P>
double hinge_step(P& p, AdagradState& st, const Triple& pos, const Triple& neg,
                  const TrainConfig& cfg) {
  constexpr bool is_rescal = std::is_same_v<P, RescalParams>;
  constexpr bool is_complex = std::is_same_v<P, ComplexParams>;
  constexpr bool is_hole = std::is_same_v<P, HolEParams>;

  const int k = pos.relation;
  const int r = p.dim();
  const double s_pos = score(p, pos.subject, k, pos.object);
  const double s_neg = score(p, neg.subject, k, neg.object);
  const double f_pos = is_hole ? sigmoid(s_pos) : s_pos;
  const double f_neg = is_hole ? sigmoid(s_neg) : s_neg;
  const double loss = margin_loss(f_pos, f_neg, cfg.margin);

  const Eigen::Index edim = is_complex ? 2 * r : r;
  std::array<int, 4> rows{};
  std::array<Eigen::VectorXd, 4> egrad;
  int nrows = 0;
  auto entity_grad = [&](int row) -> Eigen::VectorXd& {
    for (int s = 0; s < nrows; ++s) {
      if (rows[static_cast<size_t>(s)] == row) return egrad[static_cast<size_t>(s)];
    }
    rows[static_cast<size_t>(nrows)] = row;
    egrad[static_cast<size_t>(nrows)] = Eigen::VectorXd::Zero(edim);
    return egrad[static_cast<size_t>(nrows++)];
  };

  using RelGrad = std::conditional_t<is_rescal, Eigen::MatrixXd, Eigen::VectorXd>;
  RelGrad rel_grad;
  if constexpr (is_rescal) {
    rel_grad = Eigen::MatrixXd::Zero(r, r);
  } else {
    rel_grad = Eigen::VectorXd::Zero(edim);
  }

  if (loss > 0) {
    double wp = -1.0, wn = 1.0;
    if constexpr (is_hole) {
      wp *= f_pos * (1.0 - f_pos);
      wn *= f_neg * (1.0 - f_neg);
    }
    auto gp = grad(p, pos.subject, k, pos.object);
    auto gn = grad(p, neg.subject, k, neg.object);
    if constexpr (is_complex) {
      auto add = [&](int row, const Eigen::VectorXd& re, const Eigen::VectorXd& im,
                     double w) {
        Eigen::VectorXd& g = entity_grad(row);
        g.head(r) += w * re;
        g.tail(r) += w * im;
      };
      add(pos.subject, gp.subject_re, gp.subject_im, wp);
      add(pos.object, gp.object_re, gp.object_im, wp);
      add(neg.subject, gn.subject_re, gn.subject_im, wn);
      add(neg.object, gn.object_re, gn.object_im, wn);
      rel_grad.head(r) = wp * gp.relation_re + wn * gn.relation_re;
      rel_grad.tail(r) = wp * gp.relation_im + wn * gn.relation_im;
    } else {
      entity_grad(pos.subject) += wp * gp.subject;
      entity_grad(pos.object) += wp * gp.object;
      entity_grad(neg.subject) += wn * gn.subject;
      entity_grad(neg.object) += wn * gn.object;
      rel_grad += wp * gp.relation + wn * gn.relation;
    }
  } else {
    entity_grad(pos.subject);
    entity_grad(pos.object);
    entity_grad(neg.subject);
    entity_grad(neg.object);
  }

  if (cfg.lambda_entity != 0) {
    for (int s = 0; s < nrows; ++s) {
      Eigen::VectorXd& g = egrad[static_cast<size_t>(s)];
      const int row = rows[static_cast<size_t>(s)];
      if constexpr (is_complex) {
        g.head(r) += cfg.lambda_entity * p.A_re.row(row).transpose();
        g.tail(r) += cfg.lambda_entity * p.A_im.row(row).transpose();
      } else {
        g += cfg.lambda_entity * p.A.row(row).transpose();
      }
    }
  }
  if (cfg.lambda_relation != 0) {
    if constexpr (is_rescal) {
      rel_grad += cfg.lambda_relation * p.R[static_cast<size_t>(k)];
    } else if constexpr (is_complex) {
      rel_grad.head(r) += cfg.lambda_relation * p.R_re.row(k).transpose();
      rel_grad.tail(r) += cfg.lambda_relation * p.R_im.row(k).transpose();
    } else {
      rel_grad += cfg.lambda_relation * p.R.row(k).transpose();
    }
  }

  const double eta = cfg.learning_rate, eps = st.epsilon;
  for (int s = 0; s < nrows; ++s) {
    const int row = rows[static_cast<size_t>(s)];
    const Eigen::VectorXd& g = egrad[static_cast<size_t>(s)];
    if constexpr (is_complex) {
      adagrad_update_row(p.A_re, st.acc[0], row, g.head(r), eta, eps);
      adagrad_update_row(p.A_im, st.acc[1], row, g.tail(r), eta, eps);
    } else {
      adagrad_update_row(p.A, st.acc[0], row, g, eta, eps);
    }
  }
  if constexpr (is_rescal) {
    adagrad_update(p.R[static_cast<size_t>(k)], st.acc[1 + static_cast<size_t>(k)],
                   rel_grad, eta, eps);
  } else if constexpr (is_complex) {
    adagrad_update_row(p.R_re, st.acc[2], k, rel_grad.head(r), eta, eps);
    adagrad_update_row(p.R_im, st.acc[3], k, rel_grad.tail(r), eta, eps);
  } else {
    adagrad_update_row(p.R, st.acc[1], k, rel_grad, eta, eps);
  }
  return loss;
}

}  // namespace

TrainResult train(const KnowledgeBase& kb, const TrainConfig& config) {
  return train_from(kb, config,
                    init_params(config.model, kb.num_entities(), kb.num_relations(),
                                config.dim, config.seed));
}

TrainResult train_from(const KnowledgeBase& kb, const TrainConfig& config,
                       ModelParams initial) {
  config.validate();
  if (kind_of(initial) != config.model || num_entities(initial) != kb.num_entities() ||
      num_relations(initial) != kb.num_relations()) {
    throw std::invalid_argument("train_from: initial parameters do not match");
  }

  TrainResult result;
  result.params = std::move(initial);
  AdagradState state = AdagradState::like(result.params);
  TripleIndex train_index(kb, TripleIndex::Scope::TrainOnly);

  // distinct stream from init_params so reseeding one does not shift the other
  Rng rng(config.seed ^ 0x9e3779b97f4a7c15ull);
  std::vector<Triple> order = kb.train();
  const int n = kb.num_entities();

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle(order, rng);
    double total_loss = 0;
    long steps = 0;
    for (const Triple& pos : order) {
      for (int neg_draw = 0; neg_draw < config.negatives_per_positive; ++neg_draw) {
        Triple neg = sample_negative(train_index, n, pos, rng);
        total_loss += std::visit(
            [&](auto& p) { return hinge_step(p, state, pos, neg, config); },
            result.params);
        ++steps;
      }
    }
    result.epoch_mean_loss.push_back(steps > 0 ? total_loss / static_cast<double>(steps)
                                               : 0.0);
  }
  return result;
}

GridSearchResult grid_search(const KnowledgeBase& kb, const std::vector<TrainConfig>& grid,
                             int budget_epochs, SelectionMetric metric, int threads) {
  if (grid.empty()) throw std::invalid_argument("grid_search: empty grid");
  if (kb.valid().empty()) throw std::invalid_argument("grid_search: empty validation split");

  std::vector<double> scores(grid.size(), 0.0);
  auto run_one = [&](size_t idx) {
    TrainConfig c = grid[idx];
    c.epochs = budget_epochs;
    TrainResult res = train(kb, c);
    ModelScorer scorer(res.params);
    MetricsSummary ms = evaluate_ranking(scorer, kb, kb.valid());
    scores[idx] = metric == SelectionMetric::Hits10 ? ms.hits_at_k.at(10) : ms.mrr;
  };

  if (threads <= 1) {
    for (size_t i = 0; i < grid.size(); ++i) run_one(i);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t]() {
        for (size_t i = static_cast<size_t>(t); i < grid.size();
             i += static_cast<size_t>(threads)) {
          run_one(i);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  size_t best = 0;
  for (size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return {grid[best], scores};
}

}  // namespace kgbm
