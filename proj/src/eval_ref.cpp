// Serial reference ranking: scalar scorer per candidate, hash-set filtering.

#include "eval_internal.hpp"

namespace kgforge::reference {

double rank_triple(const EmbeddingTable& table, const Triple& triple, Side side,
                   const FilterSet& filter, TiePolicy tie) {
  const double gold_score = score_triple(table, triple, RelationModule::tri);
  const EntityId gold = entity_at(triple, side);
  std::size_t greater = 0;
  std::size_t ties = 0;
  for (EntityId e = 0; e < static_cast<EntityId>(table.n_entities()); ++e) {
    if (e == gold) continue;
    const Triple cand = with_entity(triple, side, e);
    if (filter.contains(cand)) continue;
    const double s = score_triple(table, cand, RelationModule::tri);
    if (s > gold_score) ++greater;
    else if (s == gold_score) ++ties;
  }
  return detail::tie_adjusted_rank(greater, ties, tie);
}

EvalReport evaluate(const EmbeddingTable& table, std::span<const Triple> test,
                    const FilterSet& filter, RankMode mode, TiePolicy tie) {
  if (test.empty()) throw DataError("empty evaluation split");
  EvalReport report;
  report.mode = mode;
  report.tie = tie;
  for (const auto& t : test) {
    report.tail_ranks.push_back(reference::rank_triple(table, t, Side::tail, filter, tie));
    if (mode == RankMode::both_sides) {
      report.head_ranks.push_back(reference::rank_triple(table, t, Side::head, filter, tie));
    }
  }
  detail::finish_report(report, test);
  return report;
}

}  // namespace kgforge::reference
