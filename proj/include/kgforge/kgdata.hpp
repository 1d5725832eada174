#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kgforge/common.hpp"

namespace kgforge {

/// Dense string <-> id maps for entities and relations. Ids are handed out
/// in first-seen order.
class Vocab {
 public:
  EntityId intern_entity(std::string_view name);
  RelationId intern_relation(std::string_view name);

  std::optional<EntityId> find_entity(std::string_view name) const;
  std::optional<RelationId> find_relation(std::string_view name) const;

  const std::string& entity_name(EntityId id) const { return entities_.at(static_cast<std::size_t>(id)); }
  const std::string& relation_name(RelationId id) const { return relations_.at(static_cast<std::size_t>(id)); }

  std::size_t n_entities() const { return entities_.size(); }
  std::size_t n_relations() const { return relations_.size(); }

  std::span<const std::string> entity_names() const { return entities_; }
  std::span<const std::string> relation_names() const { return relations_; }

  friend bool operator==(const Vocab& a, const Vocab& b) {
    return a.entities_ == b.entities_ && a.relations_ == b.relations_;
  }

 private:
  std::vector<std::string> entities_;
  std::vector<std::string> relations_;
  std::unordered_map<std::string, EntityId> entity_ids_;
  std::unordered_map<std::string, RelationId> relation_ids_;
};

enum class Split : std::uint8_t { train, valid, test };

std::string_view split_name(Split split);

struct TripleStore {
  Split split = Split::train;
  std::vector<Triple> triples;

  std::size_t size() const { return triples.size(); }
  bool empty() const { return triples.empty(); }
};

/// Per relation, the sorted entities seen as head and as tail in training.
class PairIndex {
 public:
  PairIndex() = default;
  PairIndex(std::span<const Triple> train, std::size_t n_relations);

  std::span<const EntityId> heads_of(RelationId r) const;
  std::span<const EntityId> tails_of(RelationId r) const;

  bool has_head(RelationId r, EntityId h) const;
  bool has_tail(RelationId r, EntityId t) const;

  std::size_t n_relations() const { return heads_.size(); }

 private:
  std::vector<std::vector<EntityId>> heads_;
  std::vector<std::vector<EntityId>> tails_;
};

/// 1 iff (h, r) occurs as a head-relation pair and (r, t) as a
/// relation-tail pair somewhere in training.
inline bool pair_label(const Triple& t, const PairIndex& idx) {
  return idx.has_head(t.relation, t.head) && idx.has_tail(t.relation, t.tail);
}

/// Every known triple over all splits, grouped for filtered ranking.
class FilterSet {
 public:
  FilterSet() = default;
  explicit FilterSet(std::span<const std::span<const Triple>> splits);

  bool contains(const Triple& t) const;

  /// Known tails t' with (h, r, t') in some split, sorted.
  std::span<const EntityId> known_tails(EntityId h, RelationId r) const;
  /// Known heads h' with (h', r, t) in some split, sorted.
  std::span<const EntityId> known_heads(RelationId r, EntityId t) const;

  /// Number of distinct triples.
  std::size_t size() const { return size_; }

 private:
  static std::uint64_t key(std::int32_t a, std::int32_t b) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
  }

  std::unordered_map<std::uint64_t, std::vector<EntityId>> tails_by_head_rel_;
  std::unordered_map<std::uint64_t, std::vector<EntityId>> heads_by_rel_tail_;
  std::size_t size_ = 0;
};

struct Dataset {
  Vocab vocab;
  TripleStore train{Split::train, {}};
  TripleStore valid{Split::valid, {}};
  TripleStore test{Split::test, {}};
  PairIndex pairs;
  FilterSet filter;
  std::size_t train_duplicates_dropped = 0;

  std::size_t n_entities() const { return vocab.n_entities(); }
  std::size_t n_relations() const { return vocab.n_relations(); }
};

struct LoadOptions {
  bool lowercase = false;
};

/// Reads train.txt / valid.txt / test.txt (head<TAB>relation<TAB>tail).
Dataset load_dataset(const std::filesystem::path& dir, const LoadOptions& options = {});

using StringTriple = std::array<std::string, 3>;

/// Builds a dataset from in-memory string triples with the same encoding
/// rules as load_dataset.
Dataset make_dataset(std::span<const StringTriple> train,
                     std::span<const StringTriple> valid,
                     std::span<const StringTriple> test,
                     const LoadOptions& options = {});

/// Builds a dataset from already-encoded triples over a given vocabulary.
Dataset make_dataset(Vocab vocab, std::vector<Triple> train, std::vector<Triple> valid,
                     std::vector<Triple> test);

std::vector<StringTriple> decode(std::span<const Triple> triples, const Vocab& vocab);

struct DatasetStats {
  std::size_t n_entities = 0;
  std::size_t n_relations = 0;
  std::size_t n_train = 0;
  std::size_t n_valid = 0;
  std::size_t n_test = 0;
  std::size_t n_train_duplicates = 0;
  std::size_t n_known = 0;
};

DatasetStats dataset_stats(const Dataset& data);
std::string format_stats_text(const DatasetStats& stats);
std::string format_stats_kv(const DatasetStats& stats);

}  // namespace kgforge
