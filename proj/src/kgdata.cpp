#include "kgforge/kgdata.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace kgforge {

EntityId Vocab::intern_entity(std::string_view name) {
  auto [it, inserted] =
      entity_ids_.try_emplace(std::string(name), static_cast<EntityId>(entities_.size()));
  if (inserted) entities_.emplace_back(name);
  return it->second;
}

RelationId Vocab::intern_relation(std::string_view name) {
  auto [it, inserted] =
      relation_ids_.try_emplace(std::string(name), static_cast<RelationId>(relations_.size()));
  if (inserted) relations_.emplace_back(name);
  return it->second;
}

std::optional<EntityId> Vocab::find_entity(std::string_view name) const {
  auto it = entity_ids_.find(std::string(name));
  if (it == entity_ids_.end()) return std::nullopt;
  return it->second;
}

std::optional<RelationId> Vocab::find_relation(std::string_view name) const {
  auto it = relation_ids_.find(std::string(name));
  if (it == relation_ids_.end()) return std::nullopt;
  return it->second;
}

std::string_view split_name(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::valid: return "valid";
    case Split::test: return "test";
  }
  return "?";
}

PairIndex::PairIndex(std::span<const Triple> train, std::size_t n_relations)
    : heads_(n_relations), tails_(n_relations) {
  for (const auto& t : train) {
    heads_.at(static_cast<std::size_t>(t.relation)).push_back(t.head);
    tails_.at(static_cast<std::size_t>(t.relation)).push_back(t.tail);
  }
  for (auto* sets : {&heads_, &tails_}) {
    for (auto& s : *sets) {
      std::sort(s.begin(), s.end());
      s.erase(std::unique(s.begin(), s.end()), s.end());
    }
  }
}

std::span<const EntityId> PairIndex::heads_of(RelationId r) const {
  if (r < 0 || static_cast<std::size_t>(r) >= heads_.size()) return {};
  return heads_[static_cast<std::size_t>(r)];
}

std::span<const EntityId> PairIndex::tails_of(RelationId r) const {
  if (r < 0 || static_cast<std::size_t>(r) >= tails_.size()) return {};
  return tails_[static_cast<std::size_t>(r)];
}

bool PairIndex::has_head(RelationId r, EntityId h) const {
  auto s = heads_of(r);
  return std::binary_search(s.begin(), s.end(), h);
}

bool PairIndex::has_tail(RelationId r, EntityId t) const {
  auto s = tails_of(r);
  return std::binary_search(s.begin(), s.end(), t);
}

FilterSet::FilterSet(std::span<const std::span<const Triple>> splits) {
  for (auto split : splits) {
    for (const auto& t : split) {
      tails_by_head_rel_[key(t.head, t.relation)].push_back(t.tail);
      heads_by_rel_tail_[key(t.relation, t.tail)].push_back(t.head);
    }
  }
  for (auto* groups : {&tails_by_head_rel_, &heads_by_rel_tail_}) {
    for (auto& [k, v] : *groups) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    }
  }
  for (const auto& [k, v] : tails_by_head_rel_) size_ += v.size();
}

bool FilterSet::contains(const Triple& t) const {
  auto s = known_tails(t.head, t.relation);
  return std::binary_search(s.begin(), s.end(), t.tail);
}

std::span<const EntityId> FilterSet::known_tails(EntityId h, RelationId r) const {
  auto it = tails_by_head_rel_.find(key(h, r));
  if (it == tails_by_head_rel_.end()) return {};
  return it->second;
}

std::span<const EntityId> FilterSet::known_heads(RelationId r, EntityId t) const {
  auto it = heads_by_rel_tail_.find(key(r, t));
  if (it == heads_by_rel_tail_.end()) return {};
  return it->second;
}

namespace {

std::string normalize(std::string_view s, const LoadOptions& options) {
  std::string out(s);
  if (options.lowercase) {
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  }
  return out;
}

std::vector<StringTriple> read_split_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DataError("missing dataset file: " + file.string());

  std::vector<StringTriple> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    StringTriple fields;
    std::size_t n_fields = 0;
    std::size_t start = 0;
    while (true) {
      auto tab = line.find('\t', start);
      std::string_view field(line.data() + start,
                             (tab == std::string::npos ? line.size() : tab) - start);
      if (n_fields < 3) fields[n_fields] = std::string(field);
      ++n_fields;
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (n_fields != 3) {
      std::ostringstream msg;
      msg << file.string() << ":" << line_no << ": expected 3 tab-separated fields, got "
          << n_fields;
      throw DataError(msg.str());
    }
    rows.push_back(std::move(fields));
  }
  return rows;
}

std::vector<Triple> encode(std::span<const StringTriple> rows, Vocab& vocab,
                           const LoadOptions& options) {
  std::vector<Triple> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    Triple t;
    t.head = vocab.intern_entity(normalize(row[0], options));
    t.relation = vocab.intern_relation(normalize(row[1], options));
    t.tail = vocab.intern_entity(normalize(row[2], options));
    out.push_back(t);
  }
  return out;
}

std::size_t drop_duplicates(std::vector<Triple>& triples) {
  std::set<Triple> seen;
  std::vector<Triple> kept;
  kept.reserve(triples.size());
  for (const auto& t : triples) {
    if (seen.insert(t).second) kept.push_back(t);
  }
  std::size_t dropped = triples.size() - kept.size();
  triples = std::move(kept);
  return dropped;
}

}  // namespace

Dataset make_dataset(Vocab vocab, std::vector<Triple> train, std::vector<Triple> valid,
                     std::vector<Triple> test) {
  if (train.empty()) throw DataError("empty training split");
  const auto n_e = static_cast<EntityId>(vocab.n_entities());
  const auto n_r = static_cast<RelationId>(vocab.n_relations());
  for (const auto* split : {&train, &valid, &test}) {
    for (const auto& t : *split) {
      if (t.head < 0 || t.head >= n_e || t.tail < 0 || t.tail >= n_e || t.relation < 0 ||
          t.relation >= n_r) {
        throw DataError("triple id out of vocabulary bounds");
      }
    }
  }

  Dataset data;
  data.vocab = std::move(vocab);
  data.train_duplicates_dropped = drop_duplicates(train);
  if (data.train_duplicates_dropped > 0) {
    log_info("dropped " + std::to_string(data.train_duplicates_dropped) +
             " duplicate training triples");
  }
  data.train.triples = std::move(train);
  data.valid.triples = std::move(valid);
  data.test.triples = std::move(test);
  data.pairs = PairIndex(data.train.triples, data.vocab.n_relations());
  const std::span<const Triple> splits[] = {data.train.triples, data.valid.triples,
                                            data.test.triples};
  data.filter = FilterSet(splits);
  return data;
}

Dataset make_dataset(std::span<const StringTriple> train, std::span<const StringTriple> valid,
                     std::span<const StringTriple> test, const LoadOptions& options) {
  if (train.empty()) throw DataError("empty training split");
  Vocab vocab;
  auto train_ids = encode(train, vocab, options);
  auto valid_ids = encode(valid, vocab, options);
  auto test_ids = encode(test, vocab, options);
  return make_dataset(std::move(vocab), std::move(train_ids), std::move(valid_ids),
                      std::move(test_ids));
}

Dataset load_dataset(const std::filesystem::path& dir, const LoadOptions& options) {
  if (!std::filesystem::is_directory(dir)) {
    throw DataError("dataset directory not found: " + dir.string());
  }
  auto train = read_split_file(dir / "train.txt");
  auto valid = read_split_file(dir / "valid.txt");
  auto test = read_split_file(dir / "test.txt");
  return make_dataset(train, valid, test, options);
}

std::vector<StringTriple> decode(std::span<const Triple> triples, const Vocab& vocab) {
  std::vector<StringTriple> out;
  out.reserve(triples.size());
  for (const auto& t : triples) {
    out.push_back({vocab.entity_name(t.head), vocab.relation_name(t.relation),
                   vocab.entity_name(t.tail)});
  }
  return out;
}

DatasetStats dataset_stats(const Dataset& data) {
  DatasetStats s;
  s.n_entities = data.n_entities();
  s.n_relations = data.n_relations();
  s.n_train = data.train.size();
  s.n_valid = data.valid.size();
  s.n_test = data.test.size();
  s.n_train_duplicates = data.train_duplicates_dropped;
  s.n_known = data.filter.size();
  return s;
}

namespace {
std::vector<std::pair<std::string, std::size_t>> stats_fields(const DatasetStats& s) {
  return {{"entities", s.n_entities}, {"relations", s.n_relations},
          {"train", s.n_train},       {"valid", s.n_valid},
          {"test", s.n_test},         {"train_duplicates_dropped", s.n_train_duplicates},
          {"known_triples", s.n_known}};
}
}  // namespace

std::string format_stats_text(const DatasetStats& stats) {
  std::ostringstream out;
  for (const auto& [name, value] : stats_fields(stats)) {
    out << std::left << std::setw(26) << name << std::right << std::setw(12) << value << '\n';
  }
  return out.str();
}

std::string format_stats_kv(const DatasetStats& stats) {
  std::ostringstream out;
  for (const auto& [name, value] : stats_fields(stats)) out << name << '=' << value << '\n';
  return out.str();
}

}  // namespace kgforge
