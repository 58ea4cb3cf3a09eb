#include "kgbm/kb.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <unordered_map>

namespace kgbm {

const char* to_string(RelationCategory c) {
  switch (c) {
    case RelationCategory::OneToOne: return "1-to-1";
    case RelationCategory::OneToMany: return "1-to-N";
    case RelationCategory::ManyToOne: return "N-to-1";
    case RelationCategory::ManyToMany: return "N-to-N";
  }
  return "?";
}

namespace {

struct RawTriple {
  std::string s, r, o;
};

std::vector<RawTriple> read_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open file: " + path);
  std::vector<RawTriple> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    size_t t1 = line.find('\t');
    size_t t2 = (t1 == std::string::npos) ? std::string::npos : line.find('\t', t1 + 1);
    bool extra = (t2 != std::string::npos) && line.find('\t', t2 + 1) != std::string::npos;
    if (t1 == std::string::npos || t2 == std::string::npos || extra) {
      throw IoError(path + ":" + std::to_string(lineno) +
                    ": expected 3 tab-separated fields");
    }
    out.push_back({line.substr(0, t1), line.substr(t1 + 1, t2 - t1 - 1),
                   line.substr(t2 + 1)});
  }
  return out;
}

uint64_t triple_key(const Triple& t, uint64_t n, uint64_t k) {
  return (static_cast<uint64_t>(t.subject) * k + static_cast<uint64_t>(t.relation)) * n +
         static_cast<uint64_t>(t.object);
}

}  // namespace

KnowledgeBase KnowledgeBase::load(const std::string& train_path,
                                  const std::string& valid_path,
                                  const std::string& test_path) {
  const std::string paths[3] = {train_path, valid_path, test_path};
  std::vector<RawTriple> raw[3];
  for (int s = 0; s < 3; ++s) raw[s] = read_tsv(paths[s]);

  std::unordered_map<std::string, int> ent_id, rel_id;
  std::vector<std::string> ent_names, rel_names;
  auto intern = [](std::unordered_map<std::string, int>& ids,
                   std::vector<std::string>& names, const std::string& name) {
    auto [it, inserted] = ids.emplace(name, static_cast<int>(names.size()));
    if (inserted) names.push_back(name);
    return it->second;
  };

  std::vector<Triple> splits[3];
  for (int s = 0; s < 3; ++s) {
    splits[s].reserve(raw[s].size());
    for (const RawTriple& rt : raw[s]) {
      splits[s].push_back({intern(ent_id, ent_names, rt.s),
                           intern(rel_id, rel_names, rt.r),
                           intern(ent_id, ent_names, rt.o)});
    }
  }

  // Deduplicate within and across splits (first occurrence wins).
  const uint64_t n = ent_names.size(), k = rel_names.size();
  std::unordered_set<uint64_t> seen;
  const char* split_name[3] = {"train", "valid", "test"};
  for (int s = 0; s < 3; ++s) {
    std::vector<Triple> unique;
    unique.reserve(splits[s].size());
    for (const Triple& t : splits[s]) {
      if (seen.insert(triple_key(t, n, k)).second) {
        unique.push_back(t);
      } else {
        std::cerr << "warning: dropping duplicate triple in " << split_name[s]
                  << " split: " << ent_names[t.subject] << "\t"
                  << rel_names[t.relation] << "\t" << ent_names[t.object] << "\n";
      }
    }
    splits[s] = std::move(unique);
  }

  return make(std::move(ent_names), std::move(rel_names), std::move(splits[0]),
              std::move(splits[1]), std::move(splits[2]));
}

KnowledgeBase KnowledgeBase::make(std::vector<std::string> entity_names,
                                  std::vector<std::string> relation_names,
                                  std::vector<Triple> train,
                                  std::vector<Triple> valid,
                                  std::vector<Triple> test) {
  if (entity_names.size() < 2) throw std::invalid_argument("need at least 2 entities");
  if (relation_names.empty()) throw std::invalid_argument("need at least 1 relation");

  KnowledgeBase kb;
  kb.entity_names_ = std::move(entity_names);
  kb.relation_names_ = std::move(relation_names);
  kb.train_ = std::move(train);
  kb.valid_ = std::move(valid);
  kb.test_ = std::move(test);
  for (size_t i = 0; i < kb.entity_names_.size(); ++i) {
    kb.entity_ids_[kb.entity_names_[i]] = static_cast<int>(i);
  }
  for (size_t i = 0; i < kb.relation_names_.size(); ++i) {
    kb.relation_ids_[kb.relation_names_[i]] = static_cast<int>(i);
  }

  const int n = kb.num_entities(), k = kb.num_relations();
  std::unordered_set<uint64_t> seen;
  for (const auto* split : {&kb.train_, &kb.valid_, &kb.test_}) {
    for (const Triple& t : *split) {
      if (t.subject < 0 || t.subject >= n || t.object < 0 || t.object >= n ||
          t.relation < 0 || t.relation >= k) {
        throw std::invalid_argument("triple index out of range");
      }
      if (!seen.insert(triple_key(t, n, k)).second) {
        throw std::invalid_argument("splits are not pairwise disjoint");
      }
    }
  }
  return kb;
}

int KnowledgeBase::entity_id(const std::string& name) const {
  auto it = entity_ids_.find(name);
  if (it == entity_ids_.end()) throw std::invalid_argument("unknown entity: " + name);
  return it->second;
}

int KnowledgeBase::relation_id(const std::string& name) const {
  auto it = relation_ids_.find(name);
  if (it == relation_ids_.end()) throw std::invalid_argument("unknown relation: " + name);
  return it->second;
}

void KnowledgeBase::write_split_tsv(const std::string& path,
                                    const std::vector<Triple>& split) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write file: " + path);
  for (const Triple& t : split) {
    out << entity_names_[t.subject] << '\t' << relation_names_[t.relation] << '\t'
        << entity_names_[t.object] << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

void KnowledgeBase::write_dictionaries(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  auto dump = [&](const std::string& fname, const std::vector<std::string>& names) {
    std::string path = (std::filesystem::path(dir) / fname).string();
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write file: " + path);
    for (size_t i = 0; i < names.size(); ++i) out << i << '\t' << names[i] << '\n';
  };
  dump("entities.dict", entity_names_);
  dump("relations.dict", relation_names_);
}

RelationCategory categorize_counts(long triples, long distinct_subjects,
                                   long distinct_objects) {
  double ops = static_cast<double>(triples) / static_cast<double>(distinct_subjects);
  double spo = static_cast<double>(triples) / static_cast<double>(distinct_objects);
  if (ops < 1.5 && spo < 1.5) return RelationCategory::OneToOne;
  if (ops >= 1.5 && spo < 1.5) return RelationCategory::OneToMany;
  if (ops < 1.5 && spo >= 1.5) return RelationCategory::ManyToOne;
  return RelationCategory::ManyToMany;
}

RelationCategory categorize_relation(const KnowledgeBase& kb, int k) {
  if (k < 0 || k >= kb.num_relations()) throw std::invalid_argument("relation out of range");
  std::unordered_set<int> subjects, objects;
  long count = 0;
  for (const Triple& t : kb.train()) {
    if (t.relation != k) continue;
    subjects.insert(t.subject);
    objects.insert(t.object);
    ++count;
  }
  if (count == 0) {
    throw std::invalid_argument("relation " + std::to_string(k) +
                                " has no training triples");
  }
  return categorize_counts(count, static_cast<long>(subjects.size()),
                           static_cast<long>(objects.size()));
}

TripleIndex::TripleIndex(const KnowledgeBase& kb, Scope scope)
    : num_entities_(static_cast<uint64_t>(kb.num_entities())),
      num_relations_(static_cast<uint64_t>(kb.num_relations())) {
  auto add = [&](const std::vector<Triple>& split) {
    for (const Triple& t : split) keys_.insert(key(t.subject, t.relation, t.object));
  };
  add(kb.train());
  if (scope == Scope::AllSplits) {
    add(kb.valid());
    add(kb.test());
  }
}

}  // namespace kgbm
