#pragma once

#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "kgbm/util.hpp"

namespace kgbm {

// Integer-indexed (subject, relation, object) fact.
struct Triple {
  int subject = 0;
  int relation = 0;
  int object = 0;

  friend bool operator==(const Triple&, const Triple&) = default;
};

enum class RelationCategory { OneToOne, OneToMany, ManyToOne, ManyToMany };

const char* to_string(RelationCategory c);

// Entity/relation dictionaries plus the train/valid/test splits. Immutable
// after construction; safe for concurrent reads.
class KnowledgeBase {
 public:
  // Loads three TSV files (`subject<TAB>relation<TAB>object`, UTF-8, \r\n
  // tolerated). Dictionaries are built over the union of all splits in
  // first-appearance order. Duplicate triples are dropped with a warning on
  // stderr. Malformed lines raise IoError with file and line number.
  static KnowledgeBase load(const std::string& train_path,
                            const std::string& valid_path,
                            const std::string& test_path);

  // Builds a KB from already-indexed data; validates all invariants
  // (N >= 2, K >= 1, indices in range, splits pairwise disjoint).
  static KnowledgeBase make(std::vector<std::string> entity_names,
                            std::vector<std::string> relation_names,
                            std::vector<Triple> train, std::vector<Triple> valid,
                            std::vector<Triple> test);

  int num_entities() const { return static_cast<int>(entity_names_.size()); }
  int num_relations() const { return static_cast<int>(relation_names_.size()); }

  const std::vector<std::string>& entity_names() const { return entity_names_; }
  const std::vector<std::string>& relation_names() const { return relation_names_; }

  // Reverse dictionary lookups; throw std::invalid_argument on unknown names.
  int entity_id(const std::string& name) const;
  int relation_id(const std::string& name) const;

  const std::vector<Triple>& train() const { return train_; }
  const std::vector<Triple>& valid() const { return valid_; }
  const std::vector<Triple>& test() const { return test_; }

  void write_split_tsv(const std::string& path, const std::vector<Triple>& split) const;

  // Dumps `entities.dict` / `relations.dict` (`index<TAB>name`) into dir.
  void write_dictionaries(const std::string& dir) const;

 private:
  KnowledgeBase() = default;

  std::vector<std::string> entity_names_;
  std::vector<std::string> relation_names_;
  std::unordered_map<std::string, int> entity_ids_;
  std::unordered_map<std::string, int> relation_ids_;
  std::vector<Triple> train_, valid_, test_;
};

// Category from triple count and distinct argument counts, thresholded at 1.5
// average degree.
RelationCategory categorize_counts(long triples, long distinct_subjects,
                                   long distinct_objects);

// Average objects-per-subject / subjects-per-object over the training triples
// of relation k, thresholded at 1.5. Throws std::invalid_argument if the
// relation has no training triples.
RelationCategory categorize_relation(const KnowledgeBase& kb, int k);

// O(1)-amortized triple membership, over train only or over all splits.
class TripleIndex {
 public:
  enum class Scope { TrainOnly, AllSplits };

  TripleIndex(const KnowledgeBase& kb, Scope scope);

  bool contains(int i, int k, int j) const {
    return keys_.count(key(i, k, j)) != 0;
  }
  bool contains(const Triple& t) const {
    return contains(t.subject, t.relation, t.object);
  }

 private:
  uint64_t key(int i, int k, int j) const {
    return (static_cast<uint64_t>(i) * num_relations_ + static_cast<uint64_t>(k)) *
               num_entities_ +
           static_cast<uint64_t>(j);
  }

  uint64_t num_entities_ = 0;
  uint64_t num_relations_ = 0;
  std::unordered_set<uint64_t> keys_;
};

}  // namespace kgbm
