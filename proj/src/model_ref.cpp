// Serial reference kernels. Kept for equivalence tests and benchmarks.

#include "kgforge/model.hpp"

namespace kgforge::reference {

ScoreBatch score_batch(const EmbeddingTable& table, std::span<const Triple> triples,
                       std::size_t cols, RelationModule m) {
  require(cols > 0 && triples.size() % cols == 0, "score batch: triples not a multiple of cols");
  require(m == RelationModule::tri || table.kind().joint,
          "pair module requested on a non-joint model");
  ScoreBatch out{triples.size() / cols, cols, {}};
  out.scores.reserve(triples.size());
  for (const auto& t : triples) out.scores.push_back(score_triple(table, t, m));
  return out;
}

}  // namespace kgforge::reference
