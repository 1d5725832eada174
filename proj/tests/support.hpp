#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "kgforge/config.hpp"
#include "kgforge/kgdata.hpp"
#include "kgforge/model.hpp"

namespace kgtest {

using namespace kgforge;

inline std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng, double lo = -1.0,
                                      double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

/// Random KG with distinct triples in each split.
inline Dataset random_kg(std::mt19937_64& rng, std::size_t n_entities, std::size_t n_relations,
                         std::size_t n_train, std::size_t n_valid, std::size_t n_test) {
  std::uniform_int_distribution<int> ue(0, static_cast<int>(n_entities) - 1);
  std::uniform_int_distribution<int> ur(0, static_cast<int>(n_relations) - 1);
  std::set<Triple> seen;
  auto draw = [&](std::size_t n) {
    std::vector<Triple> out;
    for (std::size_t tries = 0; out.size() < n && tries < 100 * n + 100; ++tries) {
      Triple t{ue(rng), ur(rng), ue(rng)};
      if (seen.insert(t).second) out.push_back(t);
    }
    return out;
  };
  Vocab vocab;
  for (std::size_t e = 0; e < n_entities; ++e) vocab.intern_entity("e" + std::to_string(e));
  for (std::size_t r = 0; r < n_relations; ++r) vocab.intern_relation("r" + std::to_string(r));
  auto train = draw(n_train);
  auto valid = draw(n_valid);
  auto test = draw(n_test);
  return make_dataset(std::move(vocab), std::move(train), std::move(valid), std::move(test));
}

inline void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path);
  for (const auto& l : lines) out << l << '\n';
}

/// Temporary directory removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path = std::filesystem::temp_directory_path() /
           ("kgforge_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

/// Writes a dataset directory from string triples.
inline void write_dataset(const std::filesystem::path& dir,
                          const std::vector<std::string>& train,
                          const std::vector<std::string>& valid,
                          const std::vector<std::string>& test) {
  std::filesystem::create_directories(dir);
  write_lines(dir / "train.txt", train);
  write_lines(dir / "valid.txt", valid);
  write_lines(dir / "test.txt", test);
}

/// ||a - b|| / max(||a||, ||b||), the norm-wise relative error of the gradient checks.
inline double rel_err(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), 1e-12});
}

/// Exhaustive ranking oracle: score every unfiltered candidate, sort
/// descending and read the gold position(s) off the sorted list.
inline double oracle_rank(const EmbeddingTable& table, const Triple& gold, Side side,
                          const std::set<Triple>& known, TiePolicy tie) {
  const double g = score_triple(table, gold, RelationModule::tri);
  std::vector<double> scores;
  for (std::size_t e = 0; e < table.n_entities(); ++e) {
    const Triple c = with_entity(gold, side, static_cast<EntityId>(e));
    if (c != gold && known.count(c) != 0) continue;
    scores.push_back(score_triple(table, c, RelationModule::tri));
  }
  std::sort(scores.begin(), scores.end(), std::greater<>());
  const auto first = std::find(scores.begin(), scores.end(), g);
  const auto last = std::find_if(first, scores.end(), [g](double x) { return x != g; });
  const double best = static_cast<double>(first - scores.begin()) + 1.0;
  const double worst = static_cast<double>(last - scores.begin());
  switch (tie) {
    case TiePolicy::optimistic: return best;
    case TiePolicy::pessimistic: return worst;
    case TiePolicy::mean: return 0.5 * (best + worst);
  }
  return best;
}

/// Table whose entries are small integers, so many scores tie exactly.
inline EmbeddingTable integer_table(ModelKind kind, std::size_t n_e, std::size_t n_r,
                                    std::size_t d, std::mt19937_64& rng, int range = 2) {
  EmbeddingTable t(kind, n_e, n_r, d);
  std::uniform_int_distribution<int> u(-range, range);
  for (auto& x : t.entity_data()) x = u(rng);
  for (auto& x : t.relation_data(RelationModule::tri)) x = u(rng);
  if (kind.joint) {
    for (auto& x : t.relation_data(RelationModule::bi)) x = u(rng);
  }
  return t;
}

inline std::set<Triple> known_triples(const Dataset& d) {
  std::set<Triple> all(d.train.triples.begin(), d.train.triples.end());
  all.insert(d.valid.triples.begin(), d.valid.triples.end());
  all.insert(d.test.triples.begin(), d.test.triples.end());
  return all;
}

}  // namespace kgtest
