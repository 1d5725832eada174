#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "kgforge/config.hpp"
#include "kgforge/kgdata.hpp"
#include "kgforge/model.hpp"

namespace kgforge {

/// Filtered rank of the gold entity on `side` against every entity, scored
/// with the triple module only. Candidates forming a known triple (other
/// than the gold one) are skipped.
///   rank = 1 + #{score > gold} + tie_adjust(#{score == gold})
double rank_triple(const EmbeddingTable& table, const Triple& triple, Side side,
                   const FilterSet& filter, TiePolicy tie);

struct Metrics {
  double hits1 = 0.0;
  double hits3 = 0.0;
  double hits10 = 0.0;
  double mrr = 0.0;
  std::size_t count = 0;
};

Metrics metrics_from_ranks(std::span<const double> ranks);

struct RelationRow {
  RelationId relation = 0;
  std::size_t count = 0;
  std::size_t hits1_head_count = 0;
  std::size_t hits1_tail_count = 0;
  double hits1_head = 0.0;
  double hits1_tail = 0.0;
};

struct EvalReport {
  RankMode mode = RankMode::both_sides;
  TiePolicy tie = TiePolicy::mean;
  Metrics overall;
  Metrics head;  ///< empty (count 0) in tail-only mode
  Metrics tail;
  /// Per evaluated triple, in input order; head_ranks is empty in tail-only mode.
  std::vector<double> head_ranks;
  std::vector<double> tail_ranks;
  std::vector<RelationRow> per_relation;
};

/// Ranks every triple of `test` (in parallel; results reduced in index
/// order, so the output does not depend on the thread count).
EvalReport evaluate(const EmbeddingTable& table, std::span<const Triple> test,
                    const FilterSet& filter, RankMode mode, TiePolicy tie);

/// hits@1 per relation and direction, one row per relation present in `test`.
std::vector<RelationRow> per_relation_report(std::span<const Triple> test,
                                             std::span<const double> head_ranks,
                                             std::span<const double> tail_ranks);

struct RelationGain {
  RelationId relation = 0;
  std::size_t count = 0;
  std::size_t a_head = 0, a_tail = 0;  ///< hits@1 counts of checkpoint A
  std::size_t b_head = 0, b_tail = 0;
  long gain_head() const { return static_cast<long>(b_head) - static_cast<long>(a_head); }
  long gain_tail() const { return static_cast<long>(b_tail) - static_cast<long>(a_tail); }
  long gain() const { return gain_head() + gain_tail(); }
};

/// Per-relation hits@1 gain of B over A, sorted by total gain (descending),
/// then relation id.
std::vector<RelationGain> compare_relations(const EvalReport& a, const EvalReport& b);

struct Improvement {
  std::size_t index = 0;
  Triple triple;
  Side side = Side::tail;
  double rank_a = 0.0;
  double rank_b = 0.0;
};

/// Predictions ranked first by B but not by A.
std::vector<Improvement> rank1_gained(std::span<const Triple> test, const EvalReport& a,
                                      const EvalReport& b);

std::string format_report_text(const EvalReport& report);
std::string format_metrics_tsv(const EvalReport& report);
std::string format_per_relation_tsv(const EvalReport& report, const Vocab& vocab);
std::string format_gain_tsv(std::span<const RelationGain> gains, const Vocab& vocab);
std::string format_improvements_tsv(std::span<const Improvement> items, const Vocab& vocab);

namespace reference {
double rank_triple(const EmbeddingTable& table, const Triple& triple, Side side,
                   const FilterSet& filter, TiePolicy tie);
EvalReport evaluate(const EmbeddingTable& table, std::span<const Triple> test,
                    const FilterSet& filter, RankMode mode, TiePolicy tie);
}  // namespace reference

}  // namespace kgforge
