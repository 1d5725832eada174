#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <unordered_set>
#include <vector>

#include "kgforge/common.hpp"
#include "kgforge/kgdata.hpp"

namespace kgforge {

using Rng = std::mt19937_64;

/// How the corrupted slot is chosen for each negative.
enum class SidePolicy : std::uint8_t {
  per_negative,    ///< fair coin per negative
  per_positive,    ///< all negatives of a positive share one side, alternating by position
};

struct NegSpec {
  int n_neg = 100;
  double p_bias = 0.3;
  std::uint64_t seed = 0;
  bool exclude_gold = false;
  SidePolicy side_policy = SidePolicy::per_negative;

  void validate() const;
};

struct CorruptedBatch {
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  /// n_pos * n_neg triples, negatives of positive i at [i*n_neg, (i+1)*n_neg).
  std::vector<Triple> negatives;
  std::vector<Side> sides;
};

/// Replaces one slot with an entity uniform over all n_entities ids.
Triple corrupt_uniform(const Triple& t, Side side, std::size_t n_entities, Rng& rng);

/// With probability p_bias draws the replacement from the entities seen in
/// that slot with t.relation during training, otherwise uniform. Empty
/// candidate sets fall back to uniform.
Triple corrupt_biased(const Triple& t, Side side, const PairIndex& idx, std::size_t n_entities,
                      double p_bias, Rng& rng);

/// Stateful per-worker sampler (seed = base seed + worker id).
class NegativeSampler {
 public:
  NegativeSampler(std::size_t n_entities, const PairIndex& idx, NegSpec spec,
                  std::size_t worker_id = 0);

  Triple corrupt(const Triple& t, Side side);
  Side draw_side(std::size_t positive_index);

  /// Negatives for each positive; `first_index` is the global position of
  /// positives[0], used by the per-positive side policy.
  void make_batch(std::span<const Triple> positives, CorruptedBatch& out,
                  std::size_t first_index = 0);
  CorruptedBatch make_batch(std::span<const Triple> positives);

  const NegSpec& spec() const { return spec_; }

 private:
  Triple draw(const Triple& t, Side side);

  std::size_t n_entities_;
  const PairIndex* idx_;
  NegSpec spec_;
  Rng rng_;
  std::unordered_set<RelationId> warned_empty_;
};

CorruptedBatch make_batch_negatives(std::span<const Triple> positives, const NegSpec& spec,
                                    const PairIndex& idx, std::size_t n_entities);

}  // namespace kgforge
