#include "kgbm/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "kgbm/training.hpp"

namespace kgbm {

namespace {

double rescale_clamped(double s, double lo, double hi) {
  if (lo >= hi) return 0.0;  // constant feature carries no signal
  double v = (s - lo) / (hi - lo);
  return std::clamp(v, 0.0, 1.0);
}

double stable_log1pexp(double u) {
  if (u > 35) return u;
  if (u < -35) return std::exp(u);
  return std::log1p(std::exp(u));
}

}  // namespace

MetaDataset build_meta_dataset(const KnowledgeBase& kb,
                               const std::vector<const Scorer*>& base_models,
                               const TripleIndex& train_index, int relation,
                               uint64_t seed) {
  const int m = static_cast<int>(base_models.size());
  MetaDataset ds;
  ds.feat_min = Eigen::VectorXd::Zero(m);
  ds.feat_max = Eigen::VectorXd::Zero(m);

  std::vector<Triple> positives;
  for (const Triple& t : kb.train()) {
    if (t.relation == relation) positives.push_back(t);
  }
  if (positives.empty()) {
    throw std::invalid_argument("build_meta_dataset: relation has no training triples");
  }

  Rng rng(seed);
  std::vector<Triple> all;
  std::vector<int> labels;
  for (const Triple& pos : positives) {
    Triple neg;
    try {
      neg = sample_negative(train_index, kb.num_entities(), pos, rng);
    } catch (const std::runtime_error&) {
      std::cerr << "warning: relation " << kb.relation_names()[relation]
                << " has no sampleable negatives; skipped by the ensemble\n";
      return ds;  // empty; caller falls back
    }
    all.push_back(pos);
    labels.push_back(1);
    all.push_back(neg);
    labels.push_back(0);
  }

  // raw scores, then per-model linear rescaling over this dataset
  Eigen::MatrixXd raw(static_cast<Eigen::Index>(all.size()), m);
  for (size_t e = 0; e < all.size(); ++e) {
    const Triple& t = all[e];
    for (int f = 0; f < m; ++f) {
      raw(static_cast<Eigen::Index>(e), f) =
          base_models[static_cast<size_t>(f)]->score(t.subject, t.relation, t.object);
    }
  }
  ds.feat_min = raw.colwise().minCoeff();
  ds.feat_max = raw.colwise().maxCoeff();

  ds.examples.reserve(all.size());
  for (size_t e = 0; e < all.size(); ++e) {
    MetaExample ex;
    ex.triple = all[e];
    ex.label = labels[e];
    ex.features.resize(m);
    for (int f = 0; f < m; ++f) {
      ex.features[f] =
          rescale_clamped(raw(static_cast<Eigen::Index>(e), f), ds.feat_min[f], ds.feat_max[f]);
    }
    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

LogRegFit fit_logreg(const std::vector<MetaExample>& examples, double reg) {
  if (examples.size() < 2) throw std::invalid_argument("fit_logreg: need >= 2 examples");
  bool has_pos = false, has_neg = false;
  for (const MetaExample& e : examples) (e.label == 1 ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg) {
    throw std::invalid_argument("fit_logreg: both classes must be present");
  }
  if (reg < 0) throw std::invalid_argument("fit_logreg: reg must be >= 0");

  const int m = static_cast<int>(examples[0].features.size());
  const size_t n = examples.size();

  auto objective = [&](const Eigen::VectorXd& w, double b) {
    double f = 0.5 * reg * w.squaredNorm();
    for (const MetaExample& e : examples) {
      double z = e.label == 1 ? 1.0 : -1.0;
      f += stable_log1pexp(-z * (w.dot(e.features) + b));
    }
    return f;
  };

  LogRegFit fit;
  fit.w = Eigen::VectorXd::Zero(m);
  fit.b = 0;

  double f = objective(fit.w, fit.b);
  fit.objective_trace.push_back(f);

  const int max_iters = 10000;
  const double tol = 1e-6;
  double alpha_start = 1.0 / static_cast<double>(n);
  for (int it = 0; it < max_iters; ++it) {
    Eigen::VectorXd gw = reg * fit.w;
    double gb = 0;
    for (const MetaExample& e : examples) {
      double z = e.label == 1 ? 1.0 : -1.0;
      double margin = fit.w.dot(e.features) + fit.b;
      double coeff = -z * sigmoid(-z * margin);
      gw += coeff * e.features;
      gb += coeff;
    }
    fit.final_grad_norm = std::max(gw.cwiseAbs().maxCoeff(), std::abs(gb));
    if (fit.final_grad_norm <= tol) break;

    double g2 = gw.squaredNorm() + gb * gb;
    double alpha = alpha_start;
    bool accepted = false;
    for (int back = 0; back < 60; ++back) {
      Eigen::VectorXd w_new = fit.w - alpha * gw;
      double b_new = fit.b - alpha * gb;
      double f_new = objective(w_new, b_new);
      if (f_new <= f - 1e-4 * alpha * g2) {
        fit.w = std::move(w_new);
        fit.b = b_new;
        f = f_new;
        fit.objective_trace.push_back(f);
        accepted = true;
        alpha_start = alpha * 2;  // warm-start the next search
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;  // step underflow; gradient is numerically flat
  }
  return fit;
}

double ensemble_score(const RelationEnsemble& ens,
                      const std::vector<const Scorer*>& base_models, int i, int k, int j) {
  auto it = ens.relations.find(k);
  if (it == ens.relations.end()) {
    return base_models[static_cast<size_t>(ens.fallback_model)]->score(i, k, j);
  }
  const RelationModel& rm = it->second;
  double s = rm.bias;
  for (int f = 0; f < rm.weights.size(); ++f) {
    double raw = base_models[static_cast<size_t>(f)]->score(i, k, j);
    s += rm.weights[f] * rescale_clamped(raw, rm.feat_min[f], rm.feat_max[f]);
  }
  return s;
}

Eigen::VectorXd EnsembleScorer::score_subjects(int k, int j) const {
  auto it = ens_.relations.find(k);
  if (it == ens_.relations.end()) {
    return base_[static_cast<size_t>(ens_.fallback_model)]->score_subjects(k, j);
  }
  const RelationModel& rm = it->second;
  Eigen::VectorXd out = Eigen::VectorXd::Constant(num_entities(), rm.bias);
  for (int f = 0; f < rm.weights.size(); ++f) {
    Eigen::VectorXd raw = base_[static_cast<size_t>(f)]->score_subjects(k, j);
    for (Eigen::Index i = 0; i < raw.size(); ++i) {
      out[i] += rm.weights[f] * rescale_clamped(raw[i], rm.feat_min[f], rm.feat_max[f]);
    }
  }
  return out;
}

Eigen::VectorXd EnsembleScorer::score_objects(int i, int k) const {
  auto it = ens_.relations.find(k);
  if (it == ens_.relations.end()) {
    return base_[static_cast<size_t>(ens_.fallback_model)]->score_objects(i, k);
  }
  const RelationModel& rm = it->second;
  Eigen::VectorXd out = Eigen::VectorXd::Constant(num_entities(), rm.bias);
  for (int f = 0; f < rm.weights.size(); ++f) {
    Eigen::VectorXd raw = base_[static_cast<size_t>(f)]->score_objects(i, k);
    for (Eigen::Index j = 0; j < raw.size(); ++j) {
      out[j] += rm.weights[f] * rescale_clamped(raw[j], rm.feat_min[f], rm.feat_max[f]);
    }
  }
  return out;
}

RelationEnsemble train_ensemble(const KnowledgeBase& kb,
                                const std::vector<const Scorer*>& base_models,
                                const std::vector<std::string>& model_ids, uint64_t seed,
                                double reg, int threads) {
  if (base_models.size() < 2) {
    throw std::invalid_argument("train_ensemble: need at least 2 base models");
  }
  if (model_ids.size() != base_models.size()) {
    throw std::invalid_argument("train_ensemble: one id per base model required");
  }

  RelationEnsemble ens;
  ens.model_ids = model_ids;

  // Fallback: base model with the best filtered validation HITS@10.
  ens.fallback_model = 0;
  if (!kb.valid().empty()) {
    double best = -1;
    for (size_t f = 0; f < base_models.size(); ++f) {
      MetricsSummary ms = evaluate_ranking(*base_models[f], kb, kb.valid(), threads);
      if (ms.hits_at_k.at(10) > best) {
        best = ms.hits_at_k.at(10);
        ens.fallback_model = static_cast<int>(f);
      }
    }
  }

  std::vector<int> relations;
  {
    std::vector<char> seen(static_cast<size_t>(kb.num_relations()), 0);
    for (const Triple& t : kb.train()) seen[static_cast<size_t>(t.relation)] = 1;
    for (int k = 0; k < kb.num_relations(); ++k) {
      if (seen[static_cast<size_t>(k)]) relations.push_back(k);
    }
  }

  TripleIndex train_index(kb, TripleIndex::Scope::TrainOnly);
  std::vector<std::optional<RelationModel>> fitted(relations.size());

  auto fit_one = [&](size_t idx) {
    const int k = relations[idx];
    MetaDataset ds = build_meta_dataset(kb, base_models, train_index, k,
                                        seed + static_cast<uint64_t>(k));
    if (ds.examples.empty()) return;  // degenerate relation, fallback applies
    LogRegFit lr = fit_logreg(ds.examples, reg);
    RelationModel rm;
    rm.feat_min = ds.feat_min;
    rm.feat_max = ds.feat_max;
    rm.weights = lr.w;
    rm.bias = lr.b;
    fitted[idx] = std::move(rm);
  };

  if (threads <= 1) {
    for (size_t i = 0; i < relations.size(); ++i) fit_one(i);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t]() {
        for (size_t i = static_cast<size_t>(t); i < relations.size();
             i += static_cast<size_t>(threads)) {
          fit_one(i);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  for (size_t i = 0; i < relations.size(); ++i) {
    if (fitted[i]) ens.relations[relations[i]] = std::move(*fitted[i]);
  }
  return ens;
}

// --- persistence ------------------------------------------------------------

namespace {

std::string fmt_full(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string join_vector(const Eigen::VectorXd& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) s += ' ';
    s += fmt_full(v[i]);
  }
  return s;
}

Eigen::VectorXd parse_vector(const std::string& line, int expect, const std::string& path) {
  std::istringstream ss(line);
  std::vector<double> vals;
  double v;
  while (ss >> v) vals.push_back(v);
  if (static_cast<int>(vals.size()) != expect) {
    throw IoError(path + ": expected " + std::to_string(expect) + " values");
  }
  return Eigen::Map<Eigen::VectorXd>(vals.data(), expect);
}

}  // namespace

void RelationEnsemble::save(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write ensemble file: " + path);
  out << "kgbe 1\n";
  out << "num_models " << model_ids.size() << "\n";
  for (const std::string& id : model_ids) out << "model " << id << "\n";
  out << "fallback " << fallback_model << "\n";
  out << "num_relations " << relations.size() << "\n";
  for (const auto& [k, rm] : relations) {
    out << "relation " << k << "\n";
    out << "min " << join_vector(rm.feat_min) << "\n";
    out << "max " << join_vector(rm.feat_max) << "\n";
    out << "w " << join_vector(rm.weights) << "\n";
    out << "b " << fmt_full(rm.bias) << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

RelationEnsemble RelationEnsemble::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open ensemble file: " + path);

  auto next_line = [&](const std::string& prefix) {
    std::string line;
    if (!std::getline(in, line)) throw IoError(path + ": truncated ensemble file");
    if (line.rfind(prefix, 0) != 0) {
      throw IoError(path + ": expected `" + prefix + "`, got `" + line + "`");
    }
    return line.size() > prefix.size() + 1 ? line.substr(prefix.size() + 1) : std::string();
  };

  if (next_line("kgbe") != "1") throw IoError(path + ": unsupported ensemble version");

  RelationEnsemble ens;
  int num_models = std::stoi(next_line("num_models"));
  for (int i = 0; i < num_models; ++i) ens.model_ids.push_back(next_line("model"));
  ens.fallback_model = std::stoi(next_line("fallback"));
  int num_relations = std::stoi(next_line("num_relations"));
  for (int i = 0; i < num_relations; ++i) {
    int k = std::stoi(next_line("relation"));
    RelationModel rm;
    rm.feat_min = parse_vector(next_line("min"), num_models, path);
    rm.feat_max = parse_vector(next_line("max"), num_models, path);
    rm.weights = parse_vector(next_line("w"), num_models, path);
    rm.bias = std::stod(next_line("b"));
    ens.relations[k] = std::move(rm);
  }
  return ens;
}

}  // namespace kgbm
