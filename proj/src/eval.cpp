#include "kgbm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace kgbm {

Eigen::VectorXd Scorer::score_subjects(int k, int j) const {
  Eigen::VectorXd out(num_entities());
  for (int i = 0; i < num_entities(); ++i) out[i] = score(i, k, j);
  return out;
}

Eigen::VectorXd Scorer::score_objects(int i, int k) const {
  Eigen::VectorXd out(num_entities());
  for (int j = 0; j < num_entities(); ++j) out[j] = score(i, k, j);
  return out;
}

RankResult rank_query(const Scorer& scorer, const KnowledgeBase& kb,
                      const TripleIndex& known, const Triple& t, QuerySide side) {
  const int n = kb.num_entities();
  Eigen::VectorXd scores = side == QuerySide::Subject
                               ? scorer.score_subjects(t.relation, t.object)
                               : scorer.score_objects(t.subject, t.relation);
  const int true_entity = side == QuerySide::Subject ? t.subject : t.object;
  const double true_score = scores[true_entity];

  RankResult res;
  res.query = t;
  res.side = side;
  int raw = 1, filtered = 1;
  for (int c = 0; c < n; ++c) {
    if (c == true_entity || scores[c] <= true_score) continue;
    ++raw;
    Triple cand = t;
    (side == QuerySide::Subject ? cand.subject : cand.object) = c;
    if (!known.contains(cand)) ++filtered;
  }
  res.raw_rank = raw;
  res.filtered_rank = filtered;
  return res;
}

MetricsSummary evaluate_ranking(const Scorer& scorer, const KnowledgeBase& kb,
                                const std::vector<Triple>& split, int threads) {
  if (split.empty()) throw std::invalid_argument("evaluate_ranking: empty split");
  if (scorer.num_entities() != kb.num_entities() ||
      scorer.num_relations() != kb.num_relations()) {
    throw std::invalid_argument("evaluate_ranking: model/dataset dimension mismatch");
  }

  TripleIndex known(kb, TripleIndex::Scope::AllSplits);
  const size_t q = split.size() * 2;
  std::vector<RankResult> results(q);

  auto run_range = [&](size_t begin, size_t end) {
    for (size_t idx = begin; idx < end; ++idx) {
      const Triple& t = split[idx / 2];
      QuerySide side = (idx % 2 == 0) ? QuerySide::Subject : QuerySide::Object;
      results[idx] = rank_query(scorer, kb, known, t, side);
    }
  };

  if (threads <= 1) {
    run_range(0, q);
  } else {
    std::vector<std::thread> pool;
    size_t chunk = (q + static_cast<size_t>(threads) - 1) / static_cast<size_t>(threads);
    for (int t = 0; t < threads; ++t) {
      size_t begin = std::min(q, static_cast<size_t>(t) * chunk);
      size_t end = std::min(q, begin + chunk);
      if (begin < end) pool.emplace_back(run_range, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  // One pass over train for all relation categories. Relations absent from
  // train have none; their queries count in the overall metrics only.
  std::vector<int> category(static_cast<size_t>(kb.num_relations()), -1);
  {
    std::vector<long> count(category.size(), 0);
    std::vector<std::unordered_set<int>> subjects(category.size()), objects(category.size());
    for (const Triple& t : kb.train()) {
      auto r = static_cast<size_t>(t.relation);
      ++count[r];
      subjects[r].insert(t.subject);
      objects[r].insert(t.object);
    }
    for (size_t r = 0; r < category.size(); ++r) {
      if (count[r] == 0) continue;
      category[r] = static_cast<int>(categorize_counts(
          count[r], static_cast<long>(subjects[r].size()),
          static_cast<long>(objects[r].size())));
    }
  }

  // Aggregate through an integer rank histogram: counts are order-free, so
  // the metrics do not depend on visit order or thread schedule.
  std::vector<long> rank_counts(static_cast<size_t>(kb.num_entities()) + 1, 0);
  MetricsSummary ms;
  ms.num_queries = static_cast<long>(q);
  for (const RankResult& r : results) {
    ++rank_counts[static_cast<size_t>(r.filtered_rank)];
    int cat = category[static_cast<size_t>(r.query.relation)];
    if (cat >= 0) {
      auto& cell = ms.per_category[{static_cast<RelationCategory>(cat), r.side}];
      ++cell.queries;
      if (r.filtered_rank <= 10) ++cell.hits10;
    }
  }

  double mrr_sum = 0, mr_sum = 0;
  std::map<int, long> hit_counts{{1, 0}, {3, 0}, {10, 0}};
  for (size_t rank = 1; rank < rank_counts.size(); ++rank) {
    const double count = static_cast<double>(rank_counts[rank]);
    if (count == 0) continue;
    mrr_sum += count / static_cast<double>(rank);
    mr_sum += count * static_cast<double>(rank);
    for (auto& [k, c] : hit_counts) {
      if (rank <= static_cast<size_t>(k)) c += rank_counts[rank];
    }
  }
  ms.mrr = mrr_sum / static_cast<double>(q);
  ms.mr = mr_sum / static_cast<double>(q);
  for (auto& [k, c] : hit_counts) {
    ms.hits_at_k[k] = static_cast<double>(c) / static_cast<double>(q);
  }
  return ms;
}

namespace {

std::string pct(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", fraction * 100.0);
  return buf;
}

std::string full(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

const char* category_key(RelationCategory c) {
  switch (c) {
    case RelationCategory::OneToOne: return "1to1";
    case RelationCategory::OneToMany: return "1toN";
    case RelationCategory::ManyToOne: return "Nto1";
    case RelationCategory::ManyToMany: return "NtoN";
  }
  return "?";
}

constexpr RelationCategory kAllCategories[] = {
    RelationCategory::OneToOne, RelationCategory::OneToMany,
    RelationCategory::ManyToOne, RelationCategory::ManyToMany};

}  // namespace

std::string MetricsSummary::to_table() const {
  std::ostringstream os;
  char line[128];
  std::snprintf(line, sizeof(line), "%-12s%-12s%-12s%-12s%-10s\n", "MRR (%)",
                "HITS@1 (%)", "HITS@3 (%)", "HITS@10 (%)", "MR");
  os << line;
  std::snprintf(line, sizeof(line), "%-12s%-12s%-12s%-12s%-10.1f\n", pct(mrr).c_str(),
                pct(hits_at_k.at(1)).c_str(), pct(hits_at_k.at(3)).c_str(),
                pct(hits_at_k.at(10)).c_str(), mr);
  os << line;

  if (!per_category.empty()) {
    os << "\nHITS@10 (%) per relation category\n";
    std::snprintf(line, sizeof(line), "%-10s%-28s%-28s\n", "", "Predict subject",
                  "Predict object");
    os << line;
    std::snprintf(line, sizeof(line), "%-10s%-7s%-7s%-7s%-7s%-7s%-7s%-7s%-7s\n",
                  "Relations", "1:1", "1:N", "N:1", "N:N", "1:1", "1:N", "N:1", "N:N");
    os << line;
    std::string row = "          ";
    for (QuerySide side : {QuerySide::Subject, QuerySide::Object}) {
      for (RelationCategory cat : kAllCategories) {
        auto it = per_category.find({cat, side});
        char cell[16];
        std::snprintf(cell, sizeof(cell), "%-7s",
                      it == per_category.end() ? "-" : pct(it->second.fraction()).c_str());
        row += cell;
      }
    }
    os << row << "\n";
  }
  return os.str();
}

KvList MetricsSummary::to_kv() const {
  KvList kv{
      {"mrr", full(mrr)},
      {"hits1", full(hits_at_k.at(1))},
      {"hits3", full(hits_at_k.at(3))},
      {"hits10", full(hits_at_k.at(10))},
      {"mr", full(mr)},
      {"queries", std::to_string(num_queries)},
  };
  for (const auto& [key, cell] : per_category) {
    std::string name = std::string("cat.") +
                       (key.second == QuerySide::Subject ? "subject" : "object") + "." +
                       category_key(key.first) + ".hits10";
    kv.emplace_back(name, full(cell.fraction()));
  }
  return kv;
}

std::vector<LabeledTriple> build_classification_set(const KnowledgeBase& kb,
                                                    const std::vector<Triple>& positives,
                                                    const TripleIndex& known,
                                                    uint64_t seed) {
  Rng rng(seed);
  const int n = kb.num_entities();
  std::vector<LabeledTriple> out;
  out.reserve(positives.size() * 2);
  for (const Triple& pos : positives) {
    Triple neg = pos;
    bool found = false;
    for (int attempt = 0; attempt < 100 && !found; ++attempt) {
      neg = pos;
      if (rng.coin()) {
        neg.subject = rng.uniform_int(n);
      } else {
        neg.object = rng.uniform_int(n);
      }
      found = !known.contains(neg);
    }
    if (!found) {
      std::cerr << "warning: no negative found for a triple of relation "
                << kb.relation_names()[pos.relation] << "; pair skipped\n";
      continue;
    }
    out.push_back({pos, 1});
    out.push_back({neg, 0});
  }
  return out;
}

void write_classification_tsv(const KnowledgeBase& kb, const std::string& path,
                              const std::vector<LabeledTriple>& set) {
  std::ofstream outf(path, std::ios::trunc);
  if (!outf) throw IoError("cannot write file: " + path);
  for (const LabeledTriple& lt : set) {
    outf << kb.entity_names()[lt.triple.subject] << '\t'
         << kb.relation_names()[lt.triple.relation] << '\t'
         << kb.entity_names()[lt.triple.object] << '\t' << lt.label << '\n';
  }
  if (!outf) throw IoError("write failed: " + path);
}

std::vector<LabeledTriple> read_classification_tsv(const KnowledgeBase& kb,
                                                   const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open file: " + path);
  std::vector<LabeledTriple> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string s, r, o, label;
    if (!std::getline(ss, s, '\t') || !std::getline(ss, r, '\t') ||
        !std::getline(ss, o, '\t') || !std::getline(ss, label, '\t')) {
      throw IoError(path + ":" + std::to_string(lineno) + ": expected 4 fields");
    }
    LabeledTriple lt;
    lt.triple.subject = kb.entity_id(s);
    lt.triple.relation = kb.relation_id(r);
    lt.triple.object = kb.entity_id(o);
    lt.label = label == "1" ? 1 : 0;
    out.push_back(lt);
  }
  return out;
}

double best_threshold(std::vector<double> pos_scores, std::vector<double> neg_scores,
                      double* best_accuracy) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::pair<double, int>> scored;  // (score, label)
  scored.reserve(pos_scores.size() + neg_scores.size());
  for (double s : pos_scores) scored.emplace_back(s, 1);
  for (double s : neg_scores) scored.emplace_back(s, 0);
  if (scored.empty()) {
    if (best_accuracy) *best_accuracy = 0;
    return -inf;
  }
  std::sort(scored.begin(), scored.end());

  // Accuracy of `score > sigma` changes only when sigma crosses a score, so
  // sweeping group-by-group over distinct scores visits every achievable
  // accuracy; candidate sigmas are inter-group midpoints plus +-infinity.
  long correct = static_cast<long>(pos_scores.size());  // sigma = -inf
  long best_correct = correct;
  double best_sigma = -inf;
  size_t i = 0;
  const size_t n = scored.size();
  while (i < n) {
    size_t j = i;
    long pos_in_group = 0, neg_in_group = 0;
    while (j < n && scored[j].first == scored[i].first) {
      (scored[j].second == 1 ? pos_in_group : neg_in_group) += 1;
      ++j;
    }
    correct += neg_in_group - pos_in_group;
    double candidate =
        (j < n) ? (scored[i].first + scored[j].first) / 2.0 : inf;
    if (correct > best_correct) {
      best_correct = correct;
      best_sigma = candidate;
    }
    i = j;
  }
  if (best_accuracy) {
    *best_accuracy = static_cast<double>(best_correct) / static_cast<double>(n);
  }
  return best_sigma;
}

ThresholdTable select_thresholds(const Scorer& scorer,
                                 const std::vector<LabeledTriple>& validation) {
  if (validation.empty()) {
    throw std::invalid_argument("select_thresholds: empty validation set");
  }
  std::map<int, std::pair<std::vector<double>, std::vector<double>>> by_relation;
  std::vector<double> all_pos, all_neg;
  for (const LabeledTriple& lt : validation) {
    double s = scorer.score(lt.triple.subject, lt.triple.relation, lt.triple.object);
    auto& bucket = by_relation[lt.triple.relation];
    if (lt.label == 1) {
      bucket.first.push_back(s);
      all_pos.push_back(s);
    } else {
      bucket.second.push_back(s);
      all_neg.push_back(s);
    }
  }

  ThresholdTable table;
  table.global_sigma = best_threshold(all_pos, all_neg);
  for (auto& [k, bucket] : by_relation) {
    table.sigma[k] = best_threshold(bucket.first, bucket.second);
  }
  return table;
}

double classify_triples(const Scorer& scorer, const ThresholdTable& thresholds,
                        const std::vector<LabeledTriple>& test) {
  if (test.empty()) throw std::invalid_argument("classify_triples: empty test set");
  long correct = 0;
  for (const LabeledTriple& lt : test) {
    double s = scorer.score(lt.triple.subject, lt.triple.relation, lt.triple.object);
    int predicted = s > thresholds.threshold_for(lt.triple.relation) ? 1 : 0;
    if (predicted == lt.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

}  // namespace kgbm
